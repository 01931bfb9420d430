//! Dendrogram interchange: JSON (lossless, versioned), Newick, and the
//! flat merge table with binary expansion of multifurcations.
//!
//! JSON is the canonical format and round-trips every field bit-exactly.
//! Newick and merge tables cannot carry fusion intervals natively:
//! Newick can embed them as bracket comments, while the merge table
//! expands each k-way merge into k − 1 consecutive binary rows at the
//! same height, which preserves the cophenetic structure exactly.

use crate::engine::{ClusterNode, Dendrogram};
use crate::error::{Error, Result};
use crate::linkage::MethodSpec;
use crate::prox::Kind;
use serde::{Deserialize, Serialize};

/// One binary merge: negative ids are leaves (`-1..-n` in input order),
/// positive ids refer to earlier rows (1-based). Rows are in fusion
/// order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergeRow {
    pub left: i64,
    pub right: i64,
    pub height: f64,
}

/// Flat record of all merges; `n - 1` rows for `n` objects.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeTable {
    pub rows: Vec<MergeRow>,
}

impl MergeTable {
    /// Three-column CSV with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("left,right,height\n");
        for row in &self.rows {
            out.push_str(&format!("{},{},{}\n", row.left, row.right, row.height));
        }
        out
    }
}

/// Flatten a dendrogram into its merge table. Multifurcations of `k`
/// children expand into `k - 1` consecutive rows at the node's trigger
/// height, left-folded over the children sorted by smallest contained
/// leaf id; binary merges pass through unchanged.
pub fn to_merge_table(d: &Dendrogram) -> MergeTable {
    // Internal nodes in fusion order (ids are assigned in fusion order).
    let mut internal: Vec<&ClusterNode> = Vec::new();
    d.root.walk(&mut |node| {
        if !node.is_leaf() {
            internal.push(node);
        }
    });
    internal.sort_by_key(|node| node.id);

    let mut rows = Vec::with_capacity(d.n.saturating_sub(1));
    // Row (1-based) that completes each internal node.
    let mut completing_row = vec![0i64; internal.last().map_or(0, |nd| nd.id + 1)];
    for node in internal {
        let mut children: Vec<&ClusterNode> = node.children.iter().collect();
        children.sort_by_key(|c| c.min_leaf_id());
        let code = |c: &ClusterNode, completing: &[i64]| -> i64 {
            if c.is_leaf() {
                -(c.id as i64 + 1)
            } else {
                completing[c.id]
            }
        };
        let height = node.trigger_height(d.kind);
        let mut acc = code(children[0], &completing_row);
        for child in &children[1..] {
            rows.push(MergeRow {
                left: acc,
                right: code(child, &completing_row),
                height,
            });
            acc = rows.len() as i64;
        }
        completing_row[node.id] = acc;
    }
    MergeTable { rows }
}

/// Rebuild a (binary) dendrogram from a merge table. The inverse of
/// [`to_merge_table`] for trees without multifurcations; expanded
/// multifurcations come back as nested binary merges at equal heights.
pub fn from_merge_table(
    table: &MergeTable,
    labels: &[String],
    spec: &MethodSpec,
    kind: Kind,
    digits: Option<u8>,
) -> Result<Dendrogram> {
    let n = labels.len();
    if n < 2 {
        return Err(Error::Format("merge table needs at least two objects".into()));
    }
    if table.rows.len() != n - 1 {
        return Err(Error::Format(format!(
            "expected {} merge rows for {} objects, found {}",
            n - 1,
            n,
            table.rows.len()
        )));
    }
    spec.validate(kind)?;

    let mut leaves: Vec<Option<ClusterNode>> = labels
        .iter()
        .enumerate()
        .map(|(id, label)| {
            Some(ClusterNode {
                id,
                children: Vec::new(),
                leaf_count: 1,
                interval: None,
                label: Some(label.clone()),
            })
        })
        .collect();
    let mut built: Vec<Option<ClusterNode>> = Vec::with_capacity(n - 1);

    for (r, row) in table.rows.iter().enumerate() {
        let mut resolve = |id: i64| -> Result<ClusterNode> {
            if id < 0 {
                let idx = (-id - 1) as usize;
                if idx >= n {
                    return Err(Error::Format(format!("leaf id {id} out of range")));
                }
                leaves[idx]
                    .take()
                    .ok_or_else(|| Error::Format(format!("leaf id {id} referenced twice")))
            } else if id >= 1 && (id as usize) <= r {
                built[id as usize - 1]
                    .take()
                    .ok_or_else(|| Error::Format(format!("row id {id} referenced twice")))
            } else {
                Err(Error::Format(format!(
                    "row id {id} must reference an earlier row"
                )))
            }
        };
        let left = resolve(row.left)?;
        let right = resolve(row.right)?;
        let leaf_count = left.leaf_count + right.leaf_count;
        built.push(Some(ClusterNode {
            id: n + r,
            children: vec![left, right],
            leaf_count,
            interval: Some((row.height, row.height)),
            label: None,
        }));
    }

    let root = built
        .last_mut()
        .and_then(Option::take)
        .expect("at least one merge row");
    if root.leaf_count != n {
        return Err(Error::Format(
            "merge rows do not connect all objects into one tree".into(),
        ));
    }
    Ok(Dendrogram {
        root,
        spec: *spec,
        kind,
        digits,
        n,
        binary: true,
    })
}

fn needs_quoting(label: &str) -> bool {
    label.is_empty()
        || !label
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '+' | '-'))
}

fn escape_label(label: &str) -> String {
    if needs_quoting(label) {
        format!("'{}'", label.replace('\'', "''"))
    } else {
        label.to_string()
    }
}

/// Serialize to Newick. Children are ordered by smallest contained
/// label; branch lengths are differences of trigger heights between
/// parent and child (measured toward the leaf origin, so they are
/// non-negative for monotone methods in both proximity kinds). When
/// `with_intervals` is set, nodes whose fusion interval is non-trivial
/// carry a `[Dmin=…,Dmax=…]` comment.
pub fn to_newick(d: &Dendrogram, with_intervals: bool) -> String {
    fn write_node(
        node: &ClusterNode,
        parent_height: Option<f64>,
        kind: Kind,
        with_intervals: bool,
        out: &mut String,
    ) {
        if node.is_leaf() {
            out.push_str(&escape_label(node.label.as_deref().unwrap_or("")));
        } else {
            let mut children: Vec<&ClusterNode> = node.children.iter().collect();
            children.sort_by(|a, b| a.min_label().cmp(b.min_label()));
            out.push('(');
            for (i, child) in children.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_node(child, Some(node.trigger_height(kind)), kind, with_intervals, out);
            }
            out.push(')');
            if with_intervals {
                if let Some((lo, hi)) = node.interval {
                    if lo != hi {
                        out.push_str(&format!("[Dmin={lo},Dmax={hi}]"));
                    }
                }
            }
        }
        if let Some(ph) = parent_height {
            let h = node.trigger_height(kind);
            let len = match kind {
                Kind::Distance => ph - h,
                Kind::Similarity => h - ph,
            };
            out.push_str(&format!(":{len}"));
        }
    }
    let mut out = String::new();
    write_node(&d.root, None, d.kind, with_intervals, &mut out);
    out.push(';');
    out
}

/// Parse text produced by [`to_newick`] back into a dendrogram. Newick
/// carries neither the method nor the proximity kind, so they are
/// supplied by the caller; trigger heights are rebuilt by accumulating
/// branch lengths from the leaf origin, and `[Dmin=…,Dmax=…]` comments
/// restore fusion intervals. Reconstruction is faithful to within
/// floating-point accumulation error, not bit-exact.
pub fn parse_newick(
    text: &str,
    spec: &MethodSpec,
    kind: Kind,
    digits: Option<u8>,
) -> Result<Dendrogram> {
    spec.validate(kind)?;
    let mut parser = NewickParser {
        chars: text.trim().chars().collect(),
        pos: 0,
    };
    let raw = parser.parse_node()?;
    parser.expect(';')?;
    parser.skip_ws();
    if parser.pos != parser.chars.len() {
        return Err(parser.error("trailing content after ';'"));
    }
    if raw.length.is_some() {
        return Err(Error::Format("root must not carry a branch length".into()));
    }

    let mut next_leaf = 0usize;
    let mut next_internal = 0usize;
    let root = build_parsed(raw, kind, &mut next_leaf, &mut next_internal)?;
    let n = next_leaf;
    if n < 2 {
        return Err(Error::Format("tree must contain at least two leaves".into()));
    }
    // Internal ids follow the leaves.
    let mut root = root;
    offset_internal_ids(&mut root, n);
    let mut binary = true;
    root.walk(&mut |node| {
        if !node.is_leaf() && node.children.len() != 2 {
            binary = false;
        }
    });
    Ok(Dendrogram {
        root,
        spec: *spec,
        kind,
        digits,
        n,
        binary,
    })
}

struct RawNode {
    children: Vec<RawNode>,
    label: Option<String>,
    interval: Option<(f64, f64)>,
    length: Option<f64>,
}

struct NewickParser {
    chars: Vec<char>,
    pos: usize,
}

impl NewickParser {
    fn error(&self, reason: &str) -> Error {
        Error::Format(format!("newick position {}: {}", self.pos, reason))
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{c}'")))
        }
    }

    fn parse_node(&mut self) -> Result<RawNode> {
        self.skip_ws();
        let mut node = RawNode {
            children: Vec::new(),
            label: None,
            interval: None,
            length: None,
        };
        if self.peek() == Some('(') {
            self.pos += 1;
            loop {
                node.children.push(self.parse_node()?);
                self.skip_ws();
                match self.peek() {
                    Some(',') => self.pos += 1,
                    Some(')') => {
                        self.pos += 1;
                        break;
                    }
                    _ => return Err(self.error("expected ',' or ')'")),
                }
            }
            if node.children.len() < 2 {
                return Err(self.error("internal node needs at least two children"));
            }
        } else {
            node.label = Some(self.parse_label()?);
        }
        self.skip_ws();
        if self.peek() == Some('[') {
            node.interval = Some(self.parse_interval()?);
        }
        self.skip_ws();
        if self.peek() == Some(':') {
            self.pos += 1;
            node.length = Some(self.parse_number()?);
        }
        Ok(node)
    }

    fn parse_label(&mut self) -> Result<String> {
        self.skip_ws();
        if self.peek() == Some('\'') {
            self.pos += 1;
            let mut label = String::new();
            loop {
                match self.peek() {
                    Some('\'') => {
                        self.pos += 1;
                        if self.peek() == Some('\'') {
                            label.push('\'');
                            self.pos += 1;
                        } else {
                            break;
                        }
                    }
                    Some(c) => {
                        label.push(c);
                        self.pos += 1;
                    }
                    None => return Err(self.error("unterminated quoted label")),
                }
            }
            Ok(label)
        } else {
            let mut label = String::new();
            while let Some(c) = self.peek() {
                if c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '+' | '-') {
                    label.push(c);
                    self.pos += 1;
                } else {
                    break;
                }
            }
            if label.is_empty() {
                return Err(self.error("expected a leaf label"));
            }
            Ok(label)
        }
    }

    fn parse_interval(&mut self) -> Result<(f64, f64)> {
        self.expect('[')?;
        self.expect_word("Dmin")?;
        self.expect('=')?;
        let lo = self.parse_number()?;
        self.expect(',')?;
        self.expect_word("Dmax")?;
        self.expect('=')?;
        let hi = self.parse_number()?;
        self.expect(']')?;
        if lo > hi {
            return Err(self.error("Dmin greater than Dmax"));
        }
        Ok((lo, hi))
    }

    fn expect_word(&mut self, word: &str) -> Result<()> {
        self.skip_ws();
        for c in word.chars() {
            if self.peek() == Some(c) {
                self.pos += 1;
            } else {
                return Err(self.error(&format!("expected '{word}'")));
            }
        }
        Ok(())
    }

    fn parse_number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_ascii_digit() || matches!(c, '+' | '-' | '.' | 'e' | 'E'))
        {
            self.pos += 1;
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse()
            .map_err(|_| self.error(&format!("invalid number {text:?}")))
    }
}

/// Convert the raw parse into cluster nodes, assigning leaf ids in
/// appearance order and computing trigger heights bottom-up from branch
/// lengths. Internal ids are temporary (offset afterwards).
fn build_parsed(
    raw: RawNode,
    kind: Kind,
    next_leaf: &mut usize,
    next_internal: &mut usize,
) -> Result<ClusterNode> {
    if raw.children.is_empty() {
        let id = *next_leaf;
        *next_leaf += 1;
        return Ok(ClusterNode {
            id,
            children: Vec::new(),
            leaf_count: 1,
            interval: None,
            label: Some(raw.label.expect("leaf without label")),
        });
    }
    let interval_comment = raw.interval;
    let lengths: Vec<f64> = raw
        .children
        .iter()
        .map(|c| c.length.ok_or_else(|| Error::Format("missing branch length".into())))
        .collect::<Result<_>>()?;
    let children: Vec<ClusterNode> = raw
        .children
        .into_iter()
        .map(|c| build_parsed(c, kind, next_leaf, next_internal))
        .collect::<Result<_>>()?;
    let child0_h = children[0].trigger_height(kind);
    let trigger = match kind {
        Kind::Distance => child0_h + lengths[0],
        Kind::Similarity => child0_h - lengths[0],
    };
    let interval = match interval_comment {
        Some(iv) => iv,
        None => (trigger, trigger),
    };
    let id = *next_internal;
    *next_internal += 1;
    Ok(ClusterNode {
        id,
        leaf_count: children.iter().map(|c| c.leaf_count).sum(),
        children,
        interval: Some(interval),
        label: None,
    })
}

fn offset_internal_ids(node: &mut ClusterNode, n: usize) {
    if !node.is_leaf() {
        node.id += n;
        for c in &mut node.children {
            offset_internal_ids(c, n);
        }
    }
}

const JSON_SCHEMA: &str = "multidendrogram/1";

#[derive(Serialize, Deserialize)]
struct JsonTree {
    schema: String,
    kind: Kind,
    digits: Option<u8>,
    method: MethodSpec,
    n: usize,
    root: JsonNode,
}

#[derive(Serialize, Deserialize)]
struct JsonNode {
    id: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    interval: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    children: Vec<JsonNode>,
}

fn to_json_node(node: &ClusterNode) -> JsonNode {
    JsonNode {
        id: node.id,
        label: node.label.clone(),
        interval: node.interval,
        children: node.children.iter().map(to_json_node).collect(),
    }
}

/// Serialize the full dendrogram as versioned JSON. This is the lossless
/// interchange format: heights survive bit-exactly.
pub fn to_json(d: &Dendrogram) -> String {
    let tree = JsonTree {
        schema: JSON_SCHEMA.to_string(),
        kind: d.kind,
        digits: d.digits,
        method: d.spec,
        n: d.n,
        root: to_json_node(&d.root),
    };
    serde_json::to_string_pretty(&tree).expect("dendrogram serializes")
}

fn from_json_node(node: JsonNode, leaf_seen: &mut Vec<bool>) -> Result<ClusterNode> {
    if node.children.is_empty() {
        if node.label.is_none() {
            return Err(Error::Format("leaf node without label".into()));
        }
        if node.id >= leaf_seen.len() || leaf_seen[node.id] {
            return Err(Error::Format(format!("bad or duplicate leaf id {}", node.id)));
        }
        leaf_seen[node.id] = true;
        return Ok(ClusterNode {
            id: node.id,
            children: Vec::new(),
            leaf_count: 1,
            interval: None,
            label: node.label,
        });
    }
    let (lo, hi) = node
        .interval
        .ok_or_else(|| Error::Format("internal node without interval".into()))?;
    if !(lo <= hi) {
        return Err(Error::Format(format!(
            "invalid fusion interval: Dmin = {lo} exceeds Dmax = {hi}"
        )));
    }
    if node.children.len() < 2 {
        return Err(Error::Format("internal node needs at least two children".into()));
    }
    let children: Vec<ClusterNode> = node
        .children
        .into_iter()
        .map(|c| from_json_node(c, leaf_seen))
        .collect::<Result<_>>()?;
    Ok(ClusterNode {
        id: node.id,
        leaf_count: children.iter().map(|c| c.leaf_count).sum(),
        children,
        interval: Some((lo, hi)),
        label: node.label,
    })
}

/// Parse the JSON produced by [`to_json`], validating the schema
/// version, method admissibility, leaf ids, and fusion intervals.
pub fn from_json(text: &str) -> Result<Dendrogram> {
    let tree: JsonTree =
        serde_json::from_str(text).map_err(|e| Error::Format(format!("invalid JSON: {e}")))?;
    if tree.schema != JSON_SCHEMA {
        return Err(Error::Format(format!(
            "unsupported schema {:?}, expected {JSON_SCHEMA:?}",
            tree.schema
        )));
    }
    let spec = match tree.method.param {
        None => MethodSpec::new(tree.method.method, tree.method.weighting)?,
        Some(p) => MethodSpec::with_param(tree.method.method, tree.method.weighting, p)?,
    };
    spec.validate(tree.kind)?;
    if let Some(d) = tree.digits {
        if d > 15 {
            return Err(Error::Format(format!("digits = {d} out of range 0..=15")));
        }
    }
    let mut leaf_seen = vec![false; tree.n];
    let root = from_json_node(tree.root, &mut leaf_seen)?;
    if root.leaf_count != tree.n || !leaf_seen.iter().all(|&s| s) {
        return Err(Error::Format(format!(
            "tree does not cover all {} declared objects",
            tree.n
        )));
    }
    let mut binary = true;
    root.walk(&mut |node| {
        if !node.is_leaf() && node.children.len() != 2 {
            binary = false;
        }
    });
    Ok(Dendrogram {
        root,
        spec,
        kind: tree.kind,
        digits: tree.digits,
        n: tree.n,
        binary,
    })
}
