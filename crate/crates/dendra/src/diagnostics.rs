//! Diagnostics for tie-induced nonuniqueness: parameter sweeps of the
//! descriptors, permutation studies, and bounded enumeration of the
//! structurally distinct pair-group dendrograms hiding behind ties.

use crate::descriptors::{descriptor_set, DescriptorSet};
use crate::engine::{cluster, working_values, ClusterNode, GroupMode};
use crate::error::{Error, Result};
use crate::linkage::{merge_value, MergeContext, MethodSpec};
use crate::prox::{quantize_value, tri_index, Kind, ProximityMatrix};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;
use std::str::FromStr;

/// Which descriptor a sweep extracts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    Cor,
    Sdr,
    Ac,
    Cc,
    Tb,
}

impl Measure {
    pub fn name(self) -> &'static str {
        match self {
            Measure::Cor => "cor",
            Measure::Sdr => "sdr",
            Measure::Ac => "ac",
            Measure::Cc => "cc",
            Measure::Tb => "tb",
        }
    }

    pub fn extract(self, ds: &DescriptorSet) -> f64 {
        match self {
            Measure::Cor => ds.cor,
            Measure::Sdr => ds.sdr,
            Measure::Ac => ds.ac,
            Measure::Cc => ds.cc,
            Measure::Tb => ds.tb,
        }
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cor" => Ok(Measure::Cor),
            "sdr" => Ok(Measure::Sdr),
            "ac" => Ok(Measure::Ac),
            "cc" => Ok(Measure::Cc),
            "tb" => Ok(Measure::Tb),
            other => Err(Error::Method(format!(
                "unknown measure {other:?}; expected cor, sdr, ac, cc or tb"
            ))),
        }
    }
}

impl std::fmt::Display for Measure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Cluster once per parameter value (variable-group, full resolution)
/// with the template's method and weighting, and extract the chosen
/// descriptor. Output order follows `params`.
pub fn descriptor_sweep(
    m: &ProximityMatrix,
    template: &MethodSpec,
    measure: Measure,
    params: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(params.len());
    for &p in params {
        let spec = MethodSpec::with_param(template.method, template.weighting, p)?;
        let d = cluster(m, &spec, GroupMode::Variable, None)?;
        let ds = descriptor_set(&d, m)?;
        out.push((p, measure.extract(&ds)));
    }
    Ok(out)
}

/// Cluster the matrix under `trials` object orderings — the identity
/// first, then uniformly random permutations from a seeded generator —
/// and return the cophenetic correlations, sorted ascending. With
/// variable-group clustering all values are identical to the last bit;
/// pair-group runs on tie-rich data spread out.
pub fn permutation_study(
    m: &ProximityMatrix,
    spec: &MethodSpec,
    group: GroupMode,
    digits: Option<u8>,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    assert!(trials >= 1, "permutation study needs at least one trial");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..m.n()).collect();
    let mut cors = Vec::with_capacity(trials);
    for trial in 0..trials {
        if trial > 0 {
            perm.shuffle(&mut rng);
        }
        let pm = m.permuted(&perm)?;
        let d = cluster(&pm, spec, group, digits)?;
        cors.push(descriptor_set(&d, &pm)?.cor);
    }
    cors.sort_by(f64::total_cmp);
    Ok(cors)
}

/// Count the structurally distinct binary dendrograms reachable by
/// breaking ties arbitrarily: a depth-first search over every extremal
/// pair at every iteration, deduplicated by canonical form (children
/// sorted recursively by smallest leaf, heights included, quantized at
/// `digits`). Stops once `limit` distinct trees are found, reporting
/// `exhausted = false`; otherwise the count is exact.
pub fn enumerate_pair_dendrograms(
    m: &ProximityMatrix,
    spec: &MethodSpec,
    digits: Option<u8>,
    limit: usize,
) -> Result<(usize, bool)> {
    assert!(limit >= 1, "enumeration limit must be positive");
    spec.validate(m.kind())?;
    let n = m.n();
    let values = working_values(m, spec, digits)?;
    let mut d = vec![vec![0.0f64; n]; n];
    for i in 1..n {
        for j in 0..i {
            d[i][j] = values[tri_index(i, j)];
            d[j][i] = d[i][j];
        }
    }
    let state = EnumState {
        d,
        alive: (0..n).collect(),
        size: vec![1; n],
        node: (0..n)
            .map(|id| {
                Some(ClusterNode {
                    id,
                    children: Vec::new(),
                    leaf_count: 1,
                    interval: None,
                    label: None,
                })
            })
            .collect(),
    };
    let mut seen = HashSet::new();
    let exhausted = dfs(state, spec, m.kind(), digits, limit, &mut seen);
    Ok((seen.len(), exhausted))
}

#[derive(Clone)]
struct EnumState {
    d: Vec<Vec<f64>>,
    alive: Vec<usize>,
    size: Vec<usize>,
    node: Vec<Option<ClusterNode>>,
}

/// Returns false when the search was cut short by the limit.
fn dfs(
    state: EnumState,
    spec: &MethodSpec,
    kind: Kind,
    digits: Option<u8>,
    limit: usize,
    seen: &mut HashSet<String>,
) -> bool {
    if state.alive.len() == 1 {
        let root = state.node[state.alive[0]]
            .as_ref()
            .expect("surviving cluster has a tree");
        seen.insert(canonical_key(root, digits).1);
        return seen.len() < limit;
    }

    let mut g = match kind {
        Kind::Distance => f64::INFINITY,
        Kind::Similarity => f64::NEG_INFINITY,
    };
    for (ai, &i) in state.alive.iter().enumerate() {
        for &j in &state.alive[..ai] {
            if kind.closer(state.d[i][j], g) {
                g = state.d[i][j];
            }
        }
    }
    let mut pairs = Vec::new();
    for (ai, &i) in state.alive.iter().enumerate() {
        for &j in &state.alive[..ai] {
            if state.d[i][j] == g {
                pairs.push((j.min(i), j.max(i)));
            }
        }
    }
    pairs.sort_unstable();

    for (a, b) in pairs {
        let mut next = state.clone();
        let sizes_i = [state.size[a], state.size[b]];
        let within_i = [state.d[a][b]];
        for &k in &state.alive {
            if k == a || k == b {
                continue;
            }
            let cross = [state.d[a][k], state.d[b][k]];
            let sizes_j = [state.size[k]];
            let ctx = MergeContext {
                sizes_i: &sizes_i,
                sizes_j: &sizes_j,
                cross: &cross,
                within_i: &within_i,
                within_j: &[],
            };
            let mut v = merge_value(spec, &ctx, kind);
            if let Some(dg) = digits {
                v = quantize_value(v, dg);
            }
            next.d[a][k] = v;
            next.d[k][a] = v;
        }
        let left = next.node[a].take().expect("cluster tree present");
        let right = next.node[b].take().expect("cluster tree present");
        next.node[a] = Some(ClusterNode {
            id: usize::MAX, // internal ids are irrelevant to the canonical form
            leaf_count: left.leaf_count + right.leaf_count,
            children: vec![left, right],
            interval: Some((g, g)),
            label: None,
        });
        next.size[a] += next.size[b];
        next.alive.retain(|&s| s != b);
        if !dfs(next, spec, kind, digits, limit, seen) {
            return false;
        }
    }
    true
}

/// Canonical string of a binary tree: leaves by input id, children
/// ordered by smallest contained leaf, heights as (optionally quantized)
/// bit patterns.
fn canonical_key(node: &ClusterNode, digits: Option<u8>) -> (usize, String) {
    if node.is_leaf() {
        return (node.id, node.id.to_string());
    }
    let mut parts: Vec<(usize, String)> = node
        .children
        .iter()
        .map(|c| canonical_key(c, digits))
        .collect();
    parts.sort_by_key(|&(min_leaf, _)| min_leaf);
    let h = node.interval.map_or(0.0, |(lo, _)| lo);
    let h = match digits {
        Some(dg) => quantize_value(h, dg),
        None => h,
    };
    let mut joined = String::new();
    for (i, (_, text)) in parts.iter().enumerate() {
        if i > 0 {
            joined.push(',');
        }
        joined.push_str(text);
    }
    (
        parts[0].0,
        format!("({joined})@{bits:x}", bits = h.to_bits()),
    )
}
