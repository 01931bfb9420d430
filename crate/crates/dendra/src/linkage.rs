//! Linkage kernel: inter-cluster proximities for every supported method.
//!
//! The kernel works on a [`MergeContext`] describing two groups of
//! subclusters `I` and `J` (each possibly containing several clusters that
//! are being merged simultaneously), and returns the proximity between the
//! merged groups. With `|I| = 2, |J| = 1` every formula reduces to the
//! classical pairwise update recurrence.
//!
//! All floating-point reductions sort their terms by value before summing,
//! so kernel results do not depend on the order in which subclusters are
//! listed. This is what makes whole clustering runs reproducible under
//! permutations of the input.

use crate::error::{Error, Result};
use crate::prox::Kind;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Linkage method identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Minimum distance (maximum similarity) over cross pairs.
    Single,
    /// Maximum distance (minimum similarity) over cross pairs.
    Complete,
    /// Mean of cross proximities (UPGMA/WPGMA).
    Arithmetic,
    /// Geometric mean of cross proximities.
    Geometric,
    /// Harmonic mean of cross proximities.
    Harmonic,
    /// Generalized power mean with exponent `p`.
    Versatile,
    /// Minimum-variance criterion; heights follow the plain-distance
    /// convention (inputs unsquared, internal math on squares, reported
    /// heights square-rooted).
    Ward,
    /// Squared Euclidean distance between cluster centroids; the engine
    /// maintains squared proximities internally and reports squared
    /// heights, so inversions are possible.
    Centroid,
    /// Beta-flexible family: cross coefficients sum to `1 - beta`, within
    /// coefficients to `beta`.
    Flexible,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Single => "single",
            Method::Complete => "complete",
            Method::Arithmetic => "arithmetic",
            Method::Geometric => "geometric",
            Method::Harmonic => "harmonic",
            Method::Versatile => "versatile",
            Method::Ward => "ward",
            Method::Centroid => "centroid",
            Method::Flexible => "flexible",
        }
    }

    /// True for the methods that take a parameter (`p` or `beta`).
    pub fn is_parametric(self) -> bool {
        matches!(self, Method::Versatile | Method::Flexible)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        Ok(match s {
            "single" => Method::Single,
            "complete" => Method::Complete,
            "arithmetic" => Method::Arithmetic,
            "geometric" => Method::Geometric,
            "harmonic" => Method::Harmonic,
            "versatile" => Method::Versatile,
            "ward" => Method::Ward,
            "centroid" => Method::Centroid,
            "flexible" => Method::Flexible,
            _ => return Err(Error::Method(format!("unknown method {s:?}"))),
        })
    }
}

/// Whether subclusters contribute proportionally to their leaf counts
/// (unweighted, UPGMA-style) or equally (weighted, WPGMA-style).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    Weighted,
    Unweighted,
}

/// A fully specified linkage method: identifier, weighting form, and the
/// parameter for the parametric families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub method: Method,
    pub weighting: Weighting,
    /// `p` for versatile (any extended real), `beta` for flexible
    /// (in `[-1, +1]`); must be absent for the other methods.
    #[serde(with = "extended_real_opt")]
    pub param: Option<f64>,
}

impl MethodSpec {
    /// Spec for a non-parametric method.
    pub fn new(method: Method, weighting: Weighting) -> Result<Self> {
        if method.is_parametric() {
            return Err(Error::Method(format!(
                "{method} requires a parameter; use MethodSpec::with_param"
            )));
        }
        Ok(MethodSpec {
            method,
            weighting,
            param: None,
        })
    }

    /// Spec with an explicit parameter; validates the method/parameter
    /// combination.
    pub fn with_param(method: Method, weighting: Weighting, param: f64) -> Result<Self> {
        let spec = MethodSpec {
            method,
            weighting,
            param: Some(param),
        };
        spec.check_param()?;
        Ok(spec)
    }

    pub fn versatile(p: f64, weighting: Weighting) -> Result<Self> {
        Self::with_param(Method::Versatile, weighting, p)
    }

    pub fn flexible(beta: f64, weighting: Weighting) -> Result<Self> {
        Self::with_param(Method::Flexible, weighting, beta)
    }

    fn check_param(&self) -> Result<()> {
        match (self.method, self.param) {
            (Method::Versatile, Some(p)) => {
                if p.is_nan() {
                    Err(Error::Method("versatile parameter must not be NaN".into()))
                } else {
                    Ok(())
                }
            }
            (Method::Flexible, Some(b)) => {
                if (-1.0..=1.0).contains(&b) {
                    Ok(())
                } else {
                    Err(Error::Method(format!(
                        "flexible beta must lie in [-1, +1], got {b}"
                    )))
                }
            }
            (m, Some(_)) if !m.is_parametric() => {
                Err(Error::Method(format!("{m} does not take a parameter")))
            }
            (m, None) if m.is_parametric() => {
                Err(Error::Method(format!("{m} requires a parameter")))
            }
            _ => Ok(()),
        }
    }

    /// Check that this spec may be applied to proximities of `kind`.
    pub fn validate(&self, kind: Kind) -> Result<()> {
        self.check_param()?;
        if kind == Kind::Similarity
            && matches!(self.method, Method::Ward | Method::Centroid)
        {
            return Err(Error::Method(format!(
                "{} is available only for distance data",
                self.method
            )));
        }
        Ok(())
    }
}

/// Serialize an optional extended real so that infinite parameters survive
/// JSON (which has no literal for infinity): finite values are numbers,
/// infinities become the strings `"inf"` / `"-inf"`.
mod extended_real_opt {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(serde::Serialize, serde::Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn serialize<S: Serializer>(v: &Option<f64>, ser: S) -> Result<S::Ok, S::Error> {
        match v {
            None => ser.serialize_none(),
            Some(x) if x.is_finite() => ser.serialize_some(&Repr::Num(*x)),
            Some(x) if *x > 0.0 => ser.serialize_some(&Repr::Str("inf".into())),
            Some(_) => ser.serialize_some(&Repr::Str("-inf".into())),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Option<f64>, D::Error> {
        let repr: Option<Repr> = Option::deserialize(de)?;
        match repr {
            None => Ok(None),
            Some(Repr::Num(x)) => Ok(Some(x)),
            Some(Repr::Str(s)) => match s.as_str() {
                "inf" | "+inf" => Ok(Some(f64::INFINITY)),
                "-inf" => Ok(Some(f64::NEG_INFINITY)),
                _ => Err(D::Error::custom(format!("bad parameter string {s:?}"))),
            },
        }
    }
}

/// Operands for one merge: the subclusters being joined as group `I`, the
/// target group `J`, their leaf counts, and the current proximities
/// between (`cross`) and within (`within_i`, `within_j`) the groups.
#[derive(Debug, Clone)]
pub struct MergeContext<'a> {
    /// Leaf counts of the subclusters in group `I`.
    pub sizes_i: &'a [usize],
    /// Leaf counts of the subclusters in group `J`.
    pub sizes_j: &'a [usize],
    /// Row-major `|I| x |J|` proximities `D(X_i, X_j)`.
    pub cross: &'a [f64],
    /// Strict-lower-triangle proximities among group `I`:
    /// (1,0), (2,0), (2,1), ...
    pub within_i: &'a [f64],
    /// Strict-lower-triangle proximities among group `J`.
    pub within_j: &'a [f64],
}

impl MergeContext<'_> {
    fn check(&self) -> Result<()> {
        let (ni, nj) = (self.sizes_i.len(), self.sizes_j.len());
        if ni == 0 || nj == 0 {
            return Err(Error::Method("merge context with empty group".into()));
        }
        if self.cross.len() != ni * nj
            || self.within_i.len() != ni * (ni - 1) / 2
            || self.within_j.len() != nj * (nj - 1) / 2
        {
            return Err(Error::Method("merge context dimensions inconsistent".into()));
        }
        Ok(())
    }
}

/// Sum `terms` in ascending value order. Sorting first makes the result a
/// function of the multiset of terms only, independent of input order.
pub(crate) fn stable_sum(terms: &mut Vec<f64>) -> f64 {
    terms.sort_unstable_by(f64::total_cmp);
    terms.iter().sum()
}

/// Weighted generalized (power) mean with exponent `p`.
///
/// Returns `(sum w_i v_i^p / sum w_i)^(1/p)` for finite nonzero `p`, the
/// weighted geometric mean for `p = 0`, the minimum for `p = -inf` and the
/// maximum for `p = +inf`. When `p <= 0` and some value is zero the result
/// is 0, the limit of the mean as that value tends to zero.
///
/// # Panics
/// If `values` and `weights` differ in length or are empty.
pub fn generalized_mean(values: &[f64], weights: &[f64], p: f64) -> f64 {
    assert_eq!(values.len(), weights.len(), "values/weights length mismatch");
    assert!(!values.is_empty(), "generalized mean of no values");
    if values.len() == 1 {
        // Exact for every p; also avoids the rounding of (w * v) / w.
        return values[0];
    }
    if p == f64::INFINITY {
        return values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    }
    if p == f64::NEG_INFINITY {
        return values.iter().copied().fold(f64::INFINITY, f64::min);
    }
    if p <= 0.0 && values.iter().any(|&v| v == 0.0) {
        return 0.0;
    }
    let mut wsum_terms: Vec<f64> = weights.to_vec();
    let wsum = stable_sum(&mut wsum_terms);
    if p == 1.0 {
        let mut terms: Vec<f64> =
            values.iter().zip(weights).map(|(&v, &w)| w * v).collect();
        return stable_sum(&mut terms) / wsum;
    }
    if p == 0.0 {
        let mut terms: Vec<f64> =
            values.iter().zip(weights).map(|(&v, &w)| w * v.ln()).collect();
        return (stable_sum(&mut terms) / wsum).exp();
    }
    if p == -1.0 {
        let mut terms: Vec<f64> =
            values.iter().zip(weights).map(|(&v, &w)| w / v).collect();
        return wsum / stable_sum(&mut terms);
    }
    // General finite p: factor out the extremal value so the powers stay
    // in (0, 1] and cannot overflow for large |p|.
    let scale = if p > 0.0 {
        values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    } else {
        values.iter().copied().fold(f64::INFINITY, f64::min)
    };
    let mut terms: Vec<f64> = values
        .iter()
        .zip(weights)
        .map(|(&v, &w)| w * (v / scale).powf(p))
        .collect();
    scale * (stable_sum(&mut terms) / wsum).powf(1.0 / p)
}

/// Proximity between the merged group `I` and group `J` under `spec`.
///
/// Validates the spec against `kind` and the context dimensions; see
/// [`MethodSpec`] for admissibility rules. For `|I| = |J| = 1` every
/// method returns the single cross value unchanged.
pub fn merge_proximity(spec: &MethodSpec, ctx: &MergeContext, kind: Kind) -> Result<f64> {
    spec.validate(kind)?;
    ctx.check()?;
    Ok(merge_value(spec, ctx, kind))
}

/// As [`merge_proximity`] but assumes a validated spec and context; used
/// by the engine on its hot path.
pub(crate) fn merge_value(spec: &MethodSpec, ctx: &MergeContext, kind: Kind) -> f64 {
    match spec.method {
        Method::Single => match kind {
            Kind::Distance => fold_min(ctx.cross),
            Kind::Similarity => fold_max(ctx.cross),
        },
        Method::Complete => match kind {
            Kind::Distance => fold_max(ctx.cross),
            Kind::Similarity => fold_min(ctx.cross),
        },
        Method::Arithmetic => mean_family(ctx, spec.weighting, 1.0),
        Method::Geometric => mean_family(ctx, spec.weighting, 0.0),
        Method::Harmonic => mean_family(ctx, spec.weighting, -1.0),
        Method::Versatile => mean_family(ctx, spec.weighting, spec.param.unwrap()),
        Method::Ward => ward(ctx),
        Method::Centroid => centroid(ctx, spec.weighting),
        Method::Flexible => flexible(ctx, spec.weighting, spec.param.unwrap()),
    }
}

fn fold_min(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::INFINITY, f64::min)
}

fn fold_max(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Generalized mean over the cross proximities; unweighted means weight
/// each pair by the product of leaf counts, weighted means count each
/// subcluster pair once.
fn mean_family(ctx: &MergeContext, weighting: Weighting, p: f64) -> f64 {
    let weights: Vec<f64> = match weighting {
        Weighting::Unweighted => {
            let mut w = Vec::with_capacity(ctx.cross.len());
            for &ni in ctx.sizes_i {
                for &nj in ctx.sizes_j {
                    w.push((ni * nj) as f64);
                }
            }
            w
        }
        Weighting::Weighted => vec![1.0; ctx.cross.len()],
    };
    generalized_mean(ctx.cross, &weights, p)
}

/// Centroid coefficients: proportional to leaf counts (unweighted) or
/// uniform over subclusters (weighted).
fn centroid_coeffs(sizes: &[usize], weighting: Weighting) -> Vec<f64> {
    match weighting {
        Weighting::Unweighted => {
            let total: usize = sizes.iter().sum();
            sizes.iter().map(|&s| s as f64 / total as f64).collect()
        }
        Weighting::Weighted => {
            let k = sizes.len() as f64;
            sizes.iter().map(|_| 1.0 / k).collect()
        }
    }
}

/// Bilinear centroid expansion: with `u = sum a_i u_i` and
/// `v = sum b_j v_j` the squared centroid distance is
/// `||u - v||^2 = sum a_i b_j ||u_i - v_j||^2
///              - sum_{i<i'} a_i a_i' ||u_i - u_i'||^2
///              - sum_{j<j'} b_j b_j' ||v_j - v_j'||^2`.
/// `values` here are squared Euclidean proximities maintained by the
/// engine for the centroid method.
fn bilinear(a: &[f64], b: &[f64], ctx: &MergeContext, q: impl Fn(f64, usize, usize) -> f64) -> f64 {
    let nj = ctx.sizes_j.len();
    let mut terms = Vec::with_capacity(ctx.cross.len() + ctx.within_i.len() + ctx.within_j.len());
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            terms.push(ai * bj * q(ctx.cross[i * nj + j], ctx.sizes_i[i], ctx.sizes_j[j]));
        }
    }
    let mut k = 0;
    for i in 1..a.len() {
        for i2 in 0..i {
            terms.push(-a[i] * a[i2] * q(ctx.within_i[k], ctx.sizes_i[i], ctx.sizes_i[i2]));
            k += 1;
        }
    }
    let mut k = 0;
    for j in 1..b.len() {
        for j2 in 0..j {
            terms.push(-b[j] * b[j2] * q(ctx.within_j[k], ctx.sizes_j[j], ctx.sizes_j[j2]));
            k += 1;
        }
    }
    stable_sum(&mut terms)
}

fn centroid(ctx: &MergeContext, weighting: Weighting) -> f64 {
    let a = centroid_coeffs(ctx.sizes_i, weighting);
    let b = centroid_coeffs(ctx.sizes_j, weighting);
    bilinear(&a, &b, ctx, |v, _, _| v)
}

/// Minimum-variance update. Each stored proximity `D(X_u, X_v)` encodes
/// the recoverable squared centroid distance
/// `c2(u, v) = D^2 (n_u + n_v) / (2 n_u n_v)`; the bilinear expansion of
/// those squared centroid distances gives the squared distance `s2`
/// between the group centroids, and the returned proximity re-encodes it
/// as `sqrt(2 n_I n_J / (n_I + n_J) * s2)`.
fn ward(ctx: &MergeContext) -> f64 {
    let a = centroid_coeffs(ctx.sizes_i, Weighting::Unweighted);
    let b = centroid_coeffs(ctx.sizes_j, Weighting::Unweighted);
    let s2 = bilinear(&a, &b, ctx, |d, nu, nv| {
        d * d * (nu + nv) as f64 / (2.0 * (nu * nv) as f64)
    });
    let ni: usize = ctx.sizes_i.iter().sum();
    let nj: usize = ctx.sizes_j.iter().sum();
    // Rounding in the bilinear sum can drive a geometrically-zero result
    // slightly negative; clamp before the square root.
    (2.0 * (ni * nj) as f64 / (ni + nj) as f64 * s2.max(0.0)).sqrt()
}

/// Beta-flexible update: cross coefficients sum to `1 - beta` and within
/// coefficients to `beta`. The weighted form spreads both sums uniformly;
/// the unweighted form spreads them proportionally to leaf-count products.
fn flexible(ctx: &MergeContext, weighting: Weighting, beta: f64) -> f64 {
    let pair_count = ctx.within_i.len() + ctx.within_j.len();
    if pair_count == 0 {
        // Both groups are single clusters: the only coefficient is 1.
        return ctx.cross[0];
    }
    match weighting {
        Weighting::Weighted => {
            let mut cross_terms = ctx.cross.to_vec();
            let cross_part = stable_sum(&mut cross_terms) / ctx.cross.len() as f64;
            let mut within_terms: Vec<f64> = ctx
                .within_i
                .iter()
                .chain(ctx.within_j.iter())
                .copied()
                .collect();
            let within_part = stable_sum(&mut within_terms) / pair_count as f64;
            (1.0 - beta) * cross_part + beta * within_part
        }
        Weighting::Unweighted => {
            let ni: usize = ctx.sizes_i.iter().sum();
            let nj: usize = ctx.sizes_j.iter().sum();
            let mut cross_terms = Vec::with_capacity(ctx.cross.len());
            let cols = ctx.sizes_j.len();
            for (i, &si) in ctx.sizes_i.iter().enumerate() {
                for (j, &sj) in ctx.sizes_j.iter().enumerate() {
                    cross_terms.push((si * sj) as f64 * ctx.cross[i * cols + j]);
                }
            }
            let cross_part = stable_sum(&mut cross_terms) / (ni * nj) as f64;
            let mut within_terms = Vec::with_capacity(pair_count);
            let mut size_products = 0u64;
            let mut push_group = |sizes: &[usize], within: &[f64]| {
                let mut k = 0;
                for u in 1..sizes.len() {
                    for u2 in 0..u {
                        let prod = sizes[u] * sizes[u2];
                        size_products += prod as u64;
                        within_terms.push(prod as f64 * within[k]);
                        k += 1;
                    }
                }
            };
            push_group(ctx.sizes_i, ctx.within_i);
            push_group(ctx.sizes_j, ctx.within_j);
            let within_part = stable_sum(&mut within_terms) / size_products as f64;
            (1.0 - beta) * cross_part + beta * within_part
        }
    }
}
