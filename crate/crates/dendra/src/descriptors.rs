//! Descriptive measures of a dendrogram relative to its input
//! proximities, and the plain-text summary block.

use crate::engine::{ClusterNode, Dendrogram};
use crate::error::{Error, Result};
use crate::linkage::stable_sum;
use crate::prox::{tri_index, Kind, ProximityMatrix};

/// The five goodness-of-fit and shape descriptors.
///
/// * `cor`: cophenetic correlation — Pearson correlation between input
///   proximities and cophenetic proximities over all object pairs.
/// * `sdr`: space distortion ratio — cophenetic range over input range.
/// * `ac`: agglomerative coefficient — mean over objects of one minus
///   the ratio between the height of the object's first merge and the
///   root height (heights counted from the leaf axis origin).
/// * `cc`: chaining coefficient — total imbalance between the largest
///   and smallest child of each merge, normalized by the maximum
///   attainable over binary trees, `(n - 1)(n - 2) / 2`.
/// * `tb`: tree balance — mean over merges of the normalized Shannon
///   entropy (log base = number of children) of the child sizes.
///
/// Degenerate cases (zero variance for `cor`, zero range for `sdr`,
/// zero root height for `ac`, fewer than three objects for `cc`) come
/// out as NaN and are printed as `NA`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescriptorSet {
    pub cor: f64,
    pub sdr: f64,
    pub ac: f64,
    pub cc: f64,
    pub tb: f64,
}

impl DescriptorSet {
    /// Values in display order, paired with their column names.
    pub fn columns(&self) -> [(&'static str, f64); 5] {
        [
            ("cor", self.cor),
            ("sdr", self.sdr),
            ("ac", self.ac),
            ("cc", self.cc),
            ("tb", self.tb),
        ]
    }
}

/// Cophenetic proximities induced by the dendrogram: for each pair of
/// objects, the trigger height of their lowest common ancestor. Packed
/// strict lower triangle in input (leaf id) order, matching
/// [`ProximityMatrix::lower_triangle`].
pub fn cophenetic_matrix(d: &Dendrogram) -> Vec<f64> {
    let mut out = vec![0.0; d.n * (d.n - 1) / 2];
    fill(&d.root, d.kind, &mut out);
    out
}

fn fill(node: &ClusterNode, kind: Kind, out: &mut [f64]) -> Vec<usize> {
    if node.is_leaf() {
        return vec![node.id];
    }
    let h = node.trigger_height(kind);
    let lists: Vec<Vec<usize>> = node.children.iter().map(|c| fill(c, kind, out)).collect();
    for (i, list_a) in lists.iter().enumerate() {
        for list_b in &lists[..i] {
            for &a in list_a {
                for &b in list_b {
                    out[tri_index(a.max(b), a.min(b))] = h;
                }
            }
        }
    }
    lists.into_iter().flatten().collect()
}

fn mean(values: &[f64]) -> f64 {
    let mut terms = values.to_vec();
    stable_sum(&mut terms) / values.len() as f64
}

/// Compute all five descriptors for a dendrogram against the proximity
/// matrix it was built from. The matrix must present the same objects in
/// the same order (labels are checked).
pub fn descriptor_set(d: &Dendrogram, m: &ProximityMatrix) -> Result<DescriptorSet> {
    if m.n() != d.n || d.labels() != m.labels().iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(Error::Matrix(
            "descriptor input matrix does not match the dendrogram's objects".into(),
        ));
    }
    let x = m.lower_triangle();
    let y = cophenetic_matrix(d);

    let mx = mean(x);
    let my = mean(&y);
    let mut sxy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let mut sxx: Vec<f64> = x.iter().map(|a| (a - mx) * (a - mx)).collect();
    let mut syy: Vec<f64> = y.iter().map(|b| (b - my) * (b - my)).collect();
    let (sxy, sxx, syy) = (
        stable_sum(&mut sxy),
        stable_sum(&mut sxx),
        stable_sum(&mut syy),
    );
    let cor = if sxx == 0.0 || syy == 0.0 {
        f64::NAN
    } else {
        sxy / (sxx * syy).sqrt()
    };

    let range = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    };
    let (rx, ry) = (range(x), range(&y));
    let sdr = if rx == 0.0 { f64::NAN } else { ry / rx };

    // Heights measured from the leaf axis origin: distances as-is,
    // similarities as 1 - h.
    let origin_height = |h: f64| match d.kind {
        Kind::Distance => h,
        Kind::Similarity => 1.0 - h,
    };
    let root_h = origin_height(d.root.trigger_height(d.kind));
    let mut parent_h = vec![0.0; d.n];
    d.root.walk(&mut |node| {
        if !node.is_leaf() {
            let h = origin_height(node.trigger_height(d.kind));
            for c in &node.children {
                if c.is_leaf() {
                    parent_h[c.id] = h;
                }
            }
        }
    });
    let ac = if root_h == 0.0 {
        f64::NAN
    } else {
        let terms: Vec<f64> = parent_h.iter().map(|&h| 1.0 - h / root_h).collect();
        mean(&terms)
    };

    let mut imbalance = 0usize;
    let mut entropy = Vec::new();
    d.root.walk(&mut |node| {
        if node.is_leaf() {
            return;
        }
        let sizes: Vec<usize> = node.children.iter().map(|c| c.leaf_count).collect();
        imbalance += sizes.iter().max().unwrap() - sizes.iter().min().unwrap();
        let total = node.leaf_count as f64;
        let k = sizes.len() as f64;
        let mut h: Vec<f64> = sizes
            .iter()
            .map(|&s| {
                let p = s as f64 / total;
                -p * p.ln()
            })
            .collect();
        entropy.push(stable_sum(&mut h) / k.ln());
    });
    let cc = if d.n < 3 {
        f64::NAN
    } else {
        imbalance as f64 / ((d.n - 1) * (d.n - 2) / 2) as f64
    };
    let tb = mean(&entropy);

    Ok(DescriptorSet { cor, sdr, ac, cc, tb })
}

/// Render the plain-text summary block: the call echo, object count,
/// binary flag, and the descriptor table with columns right-aligned to
/// width 9 and values printed to seven decimals (NaN as `NA`).
pub fn summary_text(d: &Dendrogram, ds: &DescriptorSet, call: &str) -> String {
    let fmt = |v: f64| {
        if v.is_nan() {
            "NA".to_string()
        } else {
            format!("{v:.7}")
        }
    };
    let cols = ds.columns();
    let header: Vec<String> = cols.iter().map(|(name, _)| format!("{name:>9}")).collect();
    let values: Vec<String> = cols.iter().map(|&(_, v)| format!("{:>9}", fmt(v))).collect();
    format!(
        "Call:\n{call}\n\nNumber of objects: {n}\n\nBinary dendrogram: {binary}\n\n\
         Descriptive measures:\n{header}\n{values}\n",
        call = call.trim_end(),
        n = d.n,
        binary = if d.binary { "TRUE" } else { "FALSE" },
        header = header.join(" "),
        values = values.join(" "),
    )
}
