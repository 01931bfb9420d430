//! Agglomeration engine: pair-group and variable-group clustering.
//!
//! Clusters occupy *slots* numbered by input position. When clusters merge,
//! the merged cluster keeps the smallest slot of its constituents, so a
//! cluster's slot is always the smallest input index it contains. Ties in
//! pair-group mode are broken by choosing the lexicographically smallest
//! slot pair, which makes runs deterministic and reproduces the published
//! behavior of implementations that renumber clusters into the freed row.
//!
//! [`cluster`] is the production engine: it keeps a per-slot
//! nearest-candidate cache with lazy invalidation over a packed triangular
//! distance store, so a full row rescan happens only when a cached
//! candidate is absorbed by a merge that moved it further away.
//! [`naive_cluster`] recomputes everything by full scans each iteration
//! and exists as an independent oracle for differential testing.

use crate::error::Result;
use crate::linkage::{merge_value, MergeContext, Method, MethodSpec};
use crate::prox::{quantize_value, tri_index, Kind, ProximityMatrix};
use serde::{Deserialize, Serialize};

/// Merge one extremal pair per iteration (classical) or every connected
/// group of tied extremal pairs at once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupMode {
    Pair,
    Variable,
}

/// A node of the clustering tree. Leaves carry a label; internal nodes
/// carry the fusion interval `(D_min, D_max)` over all pairwise
/// proximities of the subclusters merged into them.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterNode {
    /// Leaves are numbered `0..n` in input order; internal nodes continue
    /// from `n` in fusion order.
    pub id: usize,
    pub children: Vec<ClusterNode>,
    pub leaf_count: usize,
    pub interval: Option<(f64, f64)>,
    pub label: Option<String>,
}

impl ClusterNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// The proximity at which this cluster's merge was triggered: `D_min`
    /// for distances, `D_max` for similarities. Leaves sit at the axis
    /// origin (0 for distances, 1 for similarities).
    pub fn trigger_height(&self, kind: Kind) -> f64 {
        match self.interval {
            None => kind.leaf_height(),
            Some((lo, hi)) => match kind {
                Kind::Distance => lo,
                Kind::Similarity => hi,
            },
        }
    }

    /// Smallest label string contained in this subtree; used for
    /// canonical child ordering.
    pub fn min_label(&self) -> &str {
        if let Some(label) = &self.label {
            return label;
        }
        self.children
            .iter()
            .map(|c| c.min_label())
            .min()
            .expect("internal node with no children")
    }

    /// Smallest leaf id contained in this subtree.
    pub fn min_leaf_id(&self) -> usize {
        if self.is_leaf() {
            return self.id;
        }
        self.children
            .iter()
            .map(|c| c.min_leaf_id())
            .min()
            .expect("internal node with no children")
    }

    fn sort_recursively_by_label(&mut self) {
        for c in &mut self.children {
            c.sort_recursively_by_label();
        }
        self.children
            .sort_by(|a, b| a.min_label().cmp(b.min_label()));
    }

    /// Iterate all nodes of the subtree, depth first.
    pub fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a ClusterNode)) {
        visit(self);
        for c in &self.children {
            c.walk(visit);
        }
    }
}

/// Result of a clustering run: the tree plus the configuration that
/// produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    pub root: ClusterNode,
    pub spec: MethodSpec,
    pub kind: Kind,
    /// Decimal resolution applied during the run, if any.
    pub digits: Option<u8>,
    /// Number of clustered objects.
    pub n: usize,
    /// True when every internal node has exactly two children.
    pub binary: bool,
}

impl Dendrogram {
    /// Leaf labels in input order (leaf id order).
    pub fn labels(&self) -> Vec<&str> {
        let mut labels: Vec<(usize, &str)> = Vec::with_capacity(self.n);
        self.root.walk(&mut |node| {
            if let Some(l) = &node.label {
                labels.push((node.id, l));
            }
        });
        labels.sort_by_key(|&(id, _)| id);
        labels.into_iter().map(|(_, l)| l).collect()
    }

    /// Copy with children everywhere sorted by smallest contained label.
    /// Two runs over permuted inputs produce identical canonical forms.
    pub fn canonicalized(&self) -> Dendrogram {
        let mut out = self.clone();
        out.root.sort_recursively_by_label();
        out
    }
}

/// Structural equality of two dendrograms up to child order, with fusion
/// intervals compared to within `tol` (absolute, scaled by magnitude).
/// `tol = 0` demands bit-equal heights.
pub fn tree_equal(a: &Dendrogram, b: &Dendrogram, tol: f64) -> bool {
    fn close(x: f64, y: f64, tol: f64) -> bool {
        if x == y {
            return true;
        }
        (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0)
    }
    fn node_equal(a: &ClusterNode, b: &ClusterNode, tol: f64) -> bool {
        if a.label != b.label || a.leaf_count != b.leaf_count {
            return false;
        }
        match (a.interval, b.interval) {
            (None, None) => {}
            (Some((alo, ahi)), Some((blo, bhi))) => {
                if !close(alo, blo, tol) || !close(ahi, bhi, tol) {
                    return false;
                }
            }
            _ => return false,
        }
        a.children.len() == b.children.len()
            && a.children
                .iter()
                .zip(&b.children)
                .all(|(x, y)| node_equal(x, y, tol))
    }
    a.n == b.n && node_equal(&a.canonicalized().root, &b.canonicalized().root, tol)
}

/// Partition clusters `0..count` into the connected components of the
/// graph whose edges are pairs at the extremal proximity. Proximities and
/// the extremal value are compared after quantization at `digits` (pass
/// the engine's resolution; `None` compares raw values). Clusters not
/// incident to an extremal pair come back as singleton components.
/// Components are sorted by smallest member, members ascending.
pub fn tie_components(
    count: usize,
    prox: impl Fn(usize, usize) -> f64,
    extremal: f64,
    digits: Option<u8>,
) -> Vec<Vec<usize>> {
    let q = |v: f64| match digits {
        Some(d) => quantize_value(v, d),
        None => v,
    };
    let target = q(extremal);
    let mut parent: Vec<usize> = (0..count).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for i in 0..count {
        for j in 0..i {
            if q(prox(i, j)) == target {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); count];
    for i in 0..count {
        let root = find(&mut parent, i);
        groups[root].push(i);
    }
    groups.retain(|g| !g.is_empty());
    groups
}

/// Arena node used while the tree is under construction.
struct ArenaNode {
    children: Vec<usize>,
    leaf_count: usize,
    interval: Option<(f64, f64)>,
    label: Option<String>,
}

struct Arena {
    nodes: Vec<ArenaNode>,
}

impl Arena {
    fn for_labels(labels: &[String]) -> Arena {
        Arena {
            nodes: labels
                .iter()
                .map(|l| ArenaNode {
                    children: Vec::new(),
                    leaf_count: 1,
                    interval: None,
                    label: Some(l.clone()),
                })
                .collect(),
        }
    }

    fn merge(&mut self, children: Vec<usize>, interval: (f64, f64)) -> usize {
        let leaf_count = children.iter().map(|&c| self.nodes[c].leaf_count).sum();
        self.nodes.push(ArenaNode {
            children,
            leaf_count,
            interval: Some(interval),
            label: None,
        });
        self.nodes.len() - 1
    }

    fn into_tree(mut self, root: usize) -> (ClusterNode, bool) {
        let mut binary = true;
        let root = self.build(root, &mut binary);
        (root, binary)
    }

    fn build(&mut self, idx: usize, binary: &mut bool) -> ClusterNode {
        let children_idx = std::mem::take(&mut self.nodes[idx].children);
        if !children_idx.is_empty() && children_idx.len() != 2 {
            *binary = false;
        }
        let children = children_idx
            .into_iter()
            .map(|c| self.build(c, binary))
            .collect();
        let node = &mut self.nodes[idx];
        ClusterNode {
            id: idx,
            children,
            leaf_count: node.leaf_count,
            interval: node.interval,
            label: node.label.take(),
        }
    }
}

/// Prepare the working distance store: quantize the input if requested,
/// and square it for the centroid method (which maintains squared
/// Euclidean proximities internally and reports squared heights).
pub(crate) fn working_values(
    m: &ProximityMatrix,
    spec: &MethodSpec,
    digits: Option<u8>,
) -> Result<Vec<f64>> {
    let base = match digits {
        Some(d) => m.quantize(d)?.lower_triangle().to_vec(),
        None => m.lower_triangle().to_vec(),
    };
    if spec.method == Method::Centroid {
        Ok(base
            .into_iter()
            .map(|v| {
                let sq = v * v;
                match digits {
                    Some(d) => quantize_value(sq, d),
                    None => sq,
                }
            })
            .collect())
    } else {
        Ok(base)
    }
}

/// Run the agglomerative process and build the dendrogram.
///
/// When `digits` is set, the input matrix and every proximity computed
/// during the run are rounded at that resolution, so ties that arise
/// mid-process are detected; when unset, tie detection compares raw
/// values exactly. The resolution recorded on the result is exactly the
/// `digits` argument.
pub fn cluster(
    m: &ProximityMatrix,
    spec: &MethodSpec,
    group: GroupMode,
    digits: Option<u8>,
) -> Result<Dendrogram> {
    spec.validate(m.kind())?;
    let kind = m.kind();
    let n = m.n();
    let dist = working_values(m, spec, digits)?;
    let mut state = State::new(n, dist, kind);
    let mut arena = Arena::for_labels(m.labels());
    let mut node_of_slot: Vec<usize> = (0..n).collect();
    let mut active_count = n;

    while active_count > 1 {
        let g = state.extremal();
        let components = match group {
            GroupMode::Pair => vec![state.best_pair(g)],
            GroupMode::Variable => state.extremal_components(g),
        };
        let merges = state.plan_merges(&components, spec, digits);
        for plan in merges {
            let children: Vec<usize> =
                plan.members.iter().map(|&s| node_of_slot[s]).collect();
            let idx = arena.merge(children, plan.interval);
            node_of_slot[plan.survivor] = idx;
            active_count -= plan.members.len() - 1;
        }
        state.apply_pending();
    }

    let root_slot = state.active_slots().next().expect("no surviving cluster");
    let (root, binary) = arena.into_tree(node_of_slot[root_slot]);
    Ok(Dendrogram {
        root,
        spec: *spec,
        kind,
        digits,
        n,
        binary,
    })
}

/// Planned outcome of merging one tied component.
struct MergePlan {
    members: Vec<usize>,
    survivor: usize,
    interval: (f64, f64),
}

/// Mutable clustering state: packed triangular distances over slots,
/// per-slot sizes, and the nearest-candidate cache.
struct State {
    n: usize,
    kind: Kind,
    dist: Vec<f64>,
    active: Vec<bool>,
    size: Vec<usize>,
    /// `cand[i] = (j, v)`: some active slot `j` whose current distance to
    /// `i` is exactly `v`. Maintained so that after repair the global
    /// extremal proximity is `extremal over i of cand[i].1`.
    cand: Vec<(usize, f64)>,
    dirty: Vec<bool>,
    /// Writes staged by `plan_merges`, applied by `apply_pending`.
    pending_deactivate: Vec<usize>,
    pending_sizes: Vec<(usize, usize)>,
    pending_writes: Vec<(usize, usize, f64)>,
}

impl State {
    fn new(n: usize, dist: Vec<f64>, kind: Kind) -> State {
        let mut state = State {
            n,
            kind,
            dist,
            active: vec![true; n],
            size: vec![1; n],
            cand: vec![(0, 0.0); n],
            dirty: vec![false; n],
            pending_deactivate: Vec::new(),
            pending_sizes: Vec::new(),
            pending_writes: Vec::new(),
        };
        for i in 0..n {
            state.rescan(i);
        }
        state
    }

    fn d(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i > j { (i, j) } else { (j, i) };
        self.dist[tri_index(hi, lo)]
    }

    fn set_d(&mut self, i: usize, j: usize, v: f64) {
        let (hi, lo) = if i > j { (i, j) } else { (j, i) };
        self.dist[tri_index(hi, lo)] = v;
    }

    fn active_slots(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(|&i| self.active[i])
    }

    /// Recompute `cand[i]` by scanning the whole row.
    fn rescan(&mut self, i: usize) {
        let mut best: Option<(usize, f64)> = None;
        for j in self.active_slots() {
            if j == i {
                continue;
            }
            let v = self.d(i, j);
            best = match best {
                None => Some((j, v)),
                Some((_, bv)) if self.kind.closer(v, bv) => Some((j, v)),
                keep => keep,
            };
        }
        self.cand[i] = best.expect("rescan with fewer than two active clusters");
        self.dirty[i] = false;
    }

    /// Repair stale candidates and return the current extremal proximity.
    fn extremal(&mut self) -> f64 {
        let mut g: Option<f64> = None;
        for i in 0..self.n {
            if !self.active[i] {
                continue;
            }
            if self.dirty[i] || !self.active[self.cand[i].0] {
                self.rescan(i);
            }
            let v = self.cand[i].1;
            g = match g {
                None => Some(v),
                Some(b) if self.kind.closer(v, b) => Some(v),
                keep => keep,
            };
        }
        g.expect("extremal scan with no active pairs")
    }

    /// Slots whose nearest proximity equals the extremal value. Every
    /// endpoint of an extremal pair reports itself here.
    fn extremal_slots(&self, g: f64) -> Vec<usize> {
        self.active_slots()
            .filter(|&i| self.cand[i].1 == g)
            .collect()
    }

    /// Pair mode: the lexicographically smallest slot pair at the
    /// extremal proximity.
    fn best_pair(&self, g: f64) -> Vec<usize> {
        let hot = self.extremal_slots(g);
        let a = hot[0];
        let b = hot
            .iter()
            .copied()
            .find(|&j| j != a && self.d(a, j) == g)
            .expect("extremal slot without extremal partner");
        vec![a, b]
    }

    /// Variable mode: connected components (size >= 2) of the graph of
    /// extremal pairs, each sorted ascending, ordered by smallest member.
    fn extremal_components(&self, g: f64) -> Vec<Vec<usize>> {
        let hot = self.extremal_slots(g);
        let groups = tie_components(
            hot.len(),
            |a, b| self.d(hot[a], hot[b]),
            g,
            // Stored values are already at the working resolution.
            None,
        );
        groups
            .into_iter()
            .filter(|c| c.len() >= 2)
            .map(|c| c.into_iter().map(|k| hot[k]).collect())
            .collect()
    }

    /// Compute every new proximity and fusion interval for this
    /// iteration's merges, staging writes for `apply_pending`. All kernel
    /// inputs are read from the pre-merge store, so simultaneous merges
    /// see consistent state.
    fn plan_merges(
        &mut self,
        components: &[Vec<usize>],
        spec: &MethodSpec,
        digits: Option<u8>,
    ) -> Vec<MergePlan> {
        let mut comp_of: Vec<Option<usize>> = vec![None; self.n];
        for (ci, comp) in components.iter().enumerate() {
            for &s in comp {
                comp_of[s] = Some(ci);
            }
        }
        let quant = |v: f64| match digits {
            Some(d) => quantize_value(v, d),
            None => v,
        };

        let mut plans = Vec::with_capacity(components.len());
        for (ci, comp) in components.iter().enumerate() {
            let survivor = comp[0];
            let sizes_i: Vec<usize> = comp.iter().map(|&s| self.size[s]).collect();
            let within_i = self.gather_within(comp);
            let interval = {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for &v in &within_i {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                (lo, hi)
            };

            // Updates against untouched clusters.
            for k in 0..self.n {
                if !self.active[k] || comp_of[k].is_some() {
                    continue;
                }
                let cross = self.gather_cross(comp, &[k]);
                let size_k = [self.size[k]];
                let ctx = MergeContext {
                    sizes_i: &sizes_i,
                    sizes_j: &size_k,
                    cross: &cross,
                    within_i: &within_i,
                    within_j: &[],
                };
                let v = quant(merge_value(spec, &ctx, self.kind));
                self.pending_writes.push((survivor, k, v));
            }

            // Updates against components merging in the same iteration.
            for (cj, other) in components.iter().enumerate().skip(ci + 1) {
                let sizes_j: Vec<usize> = other.iter().map(|&s| self.size[s]).collect();
                let cross = self.gather_cross(comp, other);
                let within_j = self.gather_within(other);
                let ctx = MergeContext {
                    sizes_i: &sizes_i,
                    sizes_j: &sizes_j,
                    cross: &cross,
                    within_i: &within_i,
                    within_j: &within_j,
                };
                let v = quant(merge_value(spec, &ctx, self.kind));
                self.pending_writes.push((survivor, components[cj][0], v));
            }

            let total: usize = sizes_i.iter().sum();
            self.pending_sizes.push((survivor, total));
            self.pending_deactivate.extend(&comp[1..]);
            plans.push(MergePlan {
                members: comp.clone(),
                survivor,
                interval,
            });
        }
        plans
    }

    fn gather_within(&self, members: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(members.len() * (members.len() - 1) / 2);
        for (i, &a) in members.iter().enumerate() {
            for &b in &members[..i] {
                out.push(self.d(a, b));
            }
        }
        out
    }

    fn gather_cross(&self, left: &[usize], right: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(left.len() * right.len());
        for &a in left {
            for &b in right {
                out.push(self.d(a, b));
            }
        }
        out
    }

    /// Deactivate merged slots, commit staged distances, and maintain the
    /// candidate cache: a target adopts the new cluster when it moved
    /// closer, and is marked stale when its cached candidate was the new
    /// cluster but moved away. Survivors always rescan on the next pass.
    fn apply_pending(&mut self) {
        for &s in &self.pending_deactivate {
            self.active[s] = false;
        }
        self.pending_deactivate.clear();
        for &(slot, size) in &self.pending_sizes {
            self.size[slot] = size;
            self.dirty[slot] = true;
        }
        let writes = std::mem::take(&mut self.pending_writes);
        for &(survivor, target, v) in &writes {
            self.set_d(survivor, target, v);
        }
        for &(survivor, target, v) in &writes {
            for (a, b) in [(survivor, target), (target, survivor)] {
                if self.dirty[b] {
                    continue;
                }
                if self.kind.closer(v, self.cand[b].1) {
                    self.cand[b] = (a, v);
                } else if self.cand[b].0 == a {
                    self.dirty[b] = true;
                }
            }
        }
        self.pending_sizes.clear();
    }
}

/// Reference implementation of [`cluster`]: identical contract, no
/// caches, full matrix rescans every iteration. Deliberately simple so it
/// can serve as a differential-testing oracle for the optimized engine.
pub fn naive_cluster(
    m: &ProximityMatrix,
    spec: &MethodSpec,
    group: GroupMode,
    digits: Option<u8>,
) -> Result<Dendrogram> {
    spec.validate(m.kind())?;
    let kind = m.kind();
    let n = m.n();
    let values = working_values(m, spec, digits)?;
    let quant = |v: f64| match digits {
        Some(d) => quantize_value(v, d),
        None => v,
    };

    // Full symmetric matrix indexed by slot.
    let mut d = vec![vec![0.0f64; n]; n];
    for i in 1..n {
        for j in 0..i {
            d[i][j] = values[tri_index(i, j)];
            d[j][i] = d[i][j];
        }
    }
    let mut alive: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    let mut arena = Arena::for_labels(m.labels());
    let mut node_of_slot: Vec<usize> = (0..n).collect();

    while alive.len() > 1 {
        // Extremal proximity over all alive pairs.
        let mut g = match kind {
            Kind::Distance => f64::INFINITY,
            Kind::Similarity => f64::NEG_INFINITY,
        };
        for (ai, &i) in alive.iter().enumerate() {
            for &j in &alive[..ai] {
                if kind.closer(d[i][j], g) {
                    g = d[i][j];
                }
            }
        }

        let components: Vec<Vec<usize>> = match group {
            GroupMode::Pair => {
                let mut best: Option<(usize, usize)> = None;
                for (ai, &i) in alive.iter().enumerate() {
                    for &j in &alive[..ai] {
                        if d[i][j] == g {
                            let pair = (j.min(i), j.max(i));
                            best = match best {
                                None => Some(pair),
                                Some(b) if pair < b => Some(pair),
                                keep => keep,
                            };
                        }
                    }
                }
                let (a, b) = best.expect("no extremal pair");
                vec![vec![a, b]]
            }
            GroupMode::Variable => {
                tie_components(alive.len(), |a, b| d[alive[a]][alive[b]], g, None)
                    .into_iter()
                    .filter(|c| c.len() >= 2)
                    .map(|c| c.into_iter().map(|k| alive[k]).collect())
                    .collect()
            }
        };

        let merged: Vec<usize> = components.iter().flatten().copied().collect();
        let mut updates: Vec<(usize, usize, f64)> = Vec::new();
        let mut plans: Vec<(usize, Vec<usize>, (f64, f64))> = Vec::new();
        for (ci, comp) in components.iter().enumerate() {
            let survivor = comp[0];
            let sizes_i: Vec<usize> = comp.iter().map(|&s| size[s]).collect();
            let mut within_i = Vec::new();
            let mut interval = (f64::INFINITY, f64::NEG_INFINITY);
            for (i, &a) in comp.iter().enumerate() {
                for &b in &comp[..i] {
                    within_i.push(d[a][b]);
                    interval.0 = interval.0.min(d[a][b]);
                    interval.1 = interval.1.max(d[a][b]);
                }
            }
            for &k in &alive {
                if merged.contains(&k) {
                    continue;
                }
                let cross: Vec<f64> = comp.iter().map(|&a| d[a][k]).collect();
                let size_k = [size[k]];
                let ctx = MergeContext {
                    sizes_i: &sizes_i,
                    sizes_j: &size_k,
                    cross: &cross,
                    within_i: &within_i,
                    within_j: &[],
                };
                updates.push((survivor, k, quant(merge_value(spec, &ctx, kind))));
            }
            for other in components.iter().skip(ci + 1) {
                let sizes_j: Vec<usize> = other.iter().map(|&s| size[s]).collect();
                let mut cross = Vec::new();
                for &a in comp {
                    for &b in other {
                        cross.push(d[a][b]);
                    }
                }
                let mut within_j = Vec::new();
                for (j, &a) in other.iter().enumerate() {
                    for &b in &other[..j] {
                        within_j.push(d[a][b]);
                    }
                }
                let ctx = MergeContext {
                    sizes_i: &sizes_i,
                    sizes_j: &sizes_j,
                    cross: &cross,
                    within_i: &within_i,
                    within_j: &within_j,
                };
                updates.push((survivor, other[0], quant(merge_value(spec, &ctx, kind))));
            }
            plans.push((survivor, comp.clone(), interval));
        }

        for (survivor, comp, interval) in plans {
            let total: usize = comp.iter().map(|&s| size[s]).sum();
            let children: Vec<usize> = comp.iter().map(|&s| node_of_slot[s]).collect();
            let idx = arena.merge(children, interval);
            node_of_slot[survivor] = idx;
            size[survivor] = total;
            alive.retain(|s| !comp[1..].contains(s));
        }
        for (a, b, v) in updates {
            d[a][b] = v;
            d[b][a] = v;
        }
    }

    let (root, binary) = arena.into_tree(node_of_slot[alive[0]]);
    Ok(Dendrogram {
        root,
        spec: *spec,
        kind,
        digits,
        n,
        binary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linkage::Weighting;
    use crate::prox::{parse_proximity, Format};

    fn toy() -> ProximityMatrix {
        let text = ",x1,x2,x3,x4\nx1,0,2,4,7\nx2,2,0,2,5\nx3,4,2,0,3\nx4,7,5,3,0\n";
        parse_proximity(text, Format::LabeledSquareCsv, Kind::Distance).unwrap()
    }

    fn arithmetic() -> MethodSpec {
        MethodSpec::new(Method::Arithmetic, Weighting::Unweighted).unwrap()
    }

    #[test]
    fn toy_variable_group_multidendrogram() {
        let d = cluster(&toy(), &arithmetic(), GroupMode::Variable, None).unwrap();
        assert_eq!(d.n, 4);
        assert!(!d.binary);
        assert_eq!(d.root.interval, Some((5.0, 5.0)));
        assert_eq!(d.root.children.len(), 2);
        // One child is the tied triple {x1, x2, x3} with interval (2, 4).
        let triple = d
            .root
            .children
            .iter()
            .find(|c| c.leaf_count == 3)
            .expect("no 3-leaf child");
        assert_eq!(triple.interval, Some((2.0, 4.0)));
        assert_eq!(triple.children.len(), 3);
        let single = d.root.children.iter().find(|c| c.leaf_count == 1).unwrap();
        assert_eq!(single.label.as_deref(), Some("x4"));
    }

    #[test]
    fn two_object_forced_merge() {
        let m = parse_proximity("0,5\n5,0\n", Format::SquareCsv, Kind::Distance).unwrap();
        for group in [GroupMode::Pair, GroupMode::Variable] {
            let d = cluster(&m, &arithmetic(), group, None).unwrap();
            assert_eq!(d.root.interval, Some((5.0, 5.0)));
            assert_eq!(d.root.children.len(), 2);
            assert!(d.binary);
        }
    }

    #[test]
    fn pair_mode_tie_break_reproduces_three_published_orders() {
        // Orders: identity, (x2 x3 x4 x1), (x4 x1 x2 x3).
        let m = toy();
        let d1 = cluster(&m, &arithmetic(), GroupMode::Pair, None).unwrap();
        let m2 = m.permuted(&[1, 2, 3, 0]).unwrap();
        let d2 = cluster(&m2, &arithmetic(), GroupMode::Pair, None).unwrap();
        let m3 = m.permuted(&[3, 0, 1, 2]).unwrap();
        let d3 = cluster(&m3, &arithmetic(), GroupMode::Pair, None).unwrap();

        for d in [&d1, &d2, &d3] {
            assert!(d.binary);
        }
        assert!(!tree_equal(&d1, &d2, 1e-12));
        assert!(!tree_equal(&d1, &d3, 1e-12));
        assert!(!tree_equal(&d2, &d3, 1e-12));

        // Third order yields the balanced shape ((x1,x2),(x3,x4)) with the
        // root at the mean of the four cross distances.
        assert_eq!(d3.root.interval, Some((4.5, 4.5)));
        assert!(d3.root.children.iter().all(|c| c.leaf_count == 2));
    }

    #[test]
    fn tie_component_grouping() {
        let m = toy();
        // At the minimum 2 the extremal edges are (x1,x2) and (x2,x3).
        let comps = tie_components(4, |i, j| m.value(i, j), 2.0, None);
        assert_eq!(comps, vec![vec![0, 1, 2], vec![3]]);
    }

    #[test]
    fn disjoint_tied_pairs_merge_in_one_layer() {
        // d(a,b) = d(c,e) = 1 tie across disjoint pairs.
        let text = "0,1,3,4,5\n1,0,3,4,5\n3,3,0,6,1\n4,4,6,0,7\n5,5,1,7,0\n";
        let m = parse_proximity(text, Format::SquareCsv, Kind::Distance).unwrap();
        let comps = tie_components(5, |i, j| m.value(i, j), 1.0, None);
        assert_eq!(comps, vec![vec![0, 1], vec![2, 4], vec![3]]);

        let d = cluster(&m, &arithmetic(), GroupMode::Variable, None).unwrap();
        let mut first_layer: Vec<usize> = Vec::new();
        d.root.walk(&mut |node| {
            if node.interval == Some((1.0, 1.0)) {
                first_layer.push(node.leaf_count);
            }
        });
        assert_eq!(first_layer.len(), 2, "expected two simultaneous merges");
        let naive = naive_cluster(&m, &arithmetic(), GroupMode::Variable, None).unwrap();
        assert!(tree_equal(&d, &naive, 0.0));
    }

    #[test]
    fn optimized_matches_naive_on_toy() {
        for group in [GroupMode::Pair, GroupMode::Variable] {
            let a = cluster(&toy(), &arithmetic(), group, None).unwrap();
            let b = naive_cluster(&toy(), &arithmetic(), group, None).unwrap();
            assert!(tree_equal(&a, &b, 0.0));
        }
    }

    #[test]
    fn centroid_reports_squared_heights_and_can_invert() {
        // Slightly stretched equilateral triangle: the base pair (distance
        // 1) merges first, and the squared distance from the apex to the
        // base midpoint then falls below the first merge height.
        let base = 1.0f64;
        let apex = 1.04f64;
        let text = format!("0,{base},{apex}\n{base},0,{apex}\n{apex},{apex},0\n");
        let m = parse_proximity(&text, Format::SquareCsv, Kind::Distance).unwrap();
        let spec = MethodSpec::new(Method::Centroid, Weighting::Unweighted).unwrap();
        let d = cluster(&m, &spec, GroupMode::Variable, None).unwrap();
        let (root_lo, _) = d.root.interval.unwrap();
        let inner = d.root.children.iter().find(|c| c.leaf_count == 2).unwrap();
        let (inner_lo, _) = inner.interval.unwrap();
        assert_eq!(inner_lo, base * base);
        // Squared centroid-to-apex distance: apex^2 - base^2/4.
        let expect = apex * apex - base * base / 4.0;
        assert!((root_lo - expect).abs() < 1e-12);
        assert!(root_lo < inner_lo, "inversion expected: {root_lo} vs {inner_lo}");
    }

    #[test]
    fn similarity_merges_highest_first() {
        let text = "1,0.9,0.1\n0.9,1,0.2\n0.1,0.2,1\n";
        let m = parse_proximity(text, Format::SquareCsv, Kind::Similarity).unwrap();
        let spec = MethodSpec::new(Method::Arithmetic, Weighting::Unweighted).unwrap();
        let d = cluster(&m, &spec, GroupMode::Variable, None).unwrap();
        let inner = d.root.children.iter().find(|c| c.leaf_count == 2).unwrap();
        assert_eq!(inner.interval, Some((0.9, 0.9)));
        let (lo, hi) = d.root.interval.unwrap();
        assert!((lo - 0.15).abs() < 1e-12 && (hi - 0.15).abs() < 1e-12);
        assert_eq!(inner.trigger_height(Kind::Similarity), 0.9);
    }

    #[test]
    fn derived_value_quantization_detects_midprocess_ties() {
        // After {0,1} merge at distance 1, the derived distance to leaf 2
        // is mean(2.0, 2.24) = 2.12 raw but 2.1 at one decimal, where it
        // ties with the input distance d(2,3) = 2.1 and pulls leaf 3 into
        // a single three-way top merge.
        let text = "0,1,2.0,9\n1,0,2.24,9\n2.0,2.24,0,2.1\n9,9,2.1,0\n";
        let m = parse_proximity(text, Format::SquareCsv, Kind::Distance).unwrap();
        let quantized = cluster(&m, &arithmetic(), GroupMode::Variable, Some(1)).unwrap();
        assert_eq!(quantized.root.children.len(), 3);
        assert_eq!(quantized.root.interval, Some((2.1, 9.0)));
        assert_eq!(quantized.digits, Some(1));

        let raw = cluster(&m, &arithmetic(), GroupMode::Variable, None).unwrap();
        assert!(raw.binary);
        let (lo, hi) = raw.root.interval.unwrap();
        assert!((lo - 5.56).abs() < 1e-12 && hi == lo);
        assert_eq!(raw.digits, None);
    }

    #[test]
    fn canonical_form_is_permutation_invariant() {
        let m = toy();
        let spec = arithmetic();
        let base = cluster(&m, &spec, GroupMode::Variable, None).unwrap();
        for perm in [[1usize, 0, 3, 2], [3, 2, 1, 0], [2, 0, 3, 1]] {
            let p = m.permuted(&perm).unwrap();
            let d = cluster(&p, &spec, GroupMode::Variable, None).unwrap();
            assert!(tree_equal(&base, &d, 0.0), "permutation {perm:?}");
        }
    }
}
