//! Proximity-matrix ingestion, validation and quantization.
//!
//! A [`ProximityMatrix`] stores the strict lower triangle of a symmetric
//! matrix of pairwise distances or similarities, together with object labels
//! and an optional decimal resolution recording how the values were last
//! quantized. All downstream stages (linkage kernel, engine, descriptors)
//! operate on this type.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Whether the stored proximities are distances or similarities.
///
/// Distances are clustered by smallest value and may be unbounded above;
/// similarities are clustered by largest value and must lie in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Distance,
    Similarity,
}

impl Kind {
    /// Baseline height of a leaf when drawing or measuring: 0 for
    /// distances, 1 for similarities (the origin of a similarity axis).
    pub fn leaf_height(self) -> f64 {
        match self {
            Kind::Distance => 0.0,
            Kind::Similarity => 1.0,
        }
    }

    /// True when `a` is extremal relative to `b` for this kind, i.e.
    /// strictly closer in the clustering sense.
    pub(crate) fn closer(self, a: f64, b: f64) -> bool {
        match self {
            Kind::Distance => a < b,
            Kind::Similarity => a > b,
        }
    }
}

/// Text layouts understood by [`parse_proximity`] and produced by
/// [`ProximityMatrix::to_csv`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    /// Full `n x n` matrix, one row per line, no labels.
    SquareCsv,
    /// Strict lower triangle: line `k` holds the `k` values of row `k + 1`.
    LowerTriangleCsv,
    /// Full matrix with a header row of labels and a leading label column.
    LabeledSquareCsv,
}

/// Symmetric pairwise proximities over a set of labeled objects.
///
/// Only the strict lower triangle is stored; `value(i, j)` reflects the
/// symmetric value for any pair. `digits` records the decimal resolution
/// the values are known to satisfy (set by [`ProximityMatrix::quantize`]).
#[derive(Debug, Clone, PartialEq)]
pub struct ProximityMatrix {
    labels: Vec<String>,
    /// Row-major strict lower triangle: (1,0), (2,0), (2,1), (3,0), ...
    values: Vec<f64>,
    kind: Kind,
    digits: Option<u8>,
}

/// Index of pair `(i, j)`, `i > j`, in a packed strict lower triangle.
#[inline]
pub(crate) fn tri_index(i: usize, j: usize) -> usize {
    debug_assert!(i > j);
    i * (i - 1) / 2 + j
}

/// Round `v` to `digits` decimal places, ties to even.
pub(crate) fn quantize_value(v: f64, digits: u8) -> f64 {
    let scale = 10f64.powi(digits as i32);
    (v * scale).round_ties_even() / scale
}

impl ProximityMatrix {
    /// Build a matrix from its strict lower triangle, validating every
    /// entry. `labels` must have one entry per object; pass generated
    /// labels (e.g. `1..=n`) when the source data has none.
    pub fn from_lower(labels: Vec<String>, values: Vec<f64>, kind: Kind) -> Result<Self> {
        let n = labels.len();
        if n < 2 {
            return Err(Error::Matrix(format!(
                "need at least 2 objects, got {n}"
            )));
        }
        if values.len() != n * (n - 1) / 2 {
            return Err(Error::Matrix(format!(
                "expected {} values for {} objects, got {}",
                n * (n - 1) / 2,
                n,
                values.len()
            )));
        }
        for &v in &values {
            validate_value(v, kind)?;
        }
        Ok(ProximityMatrix {
            labels,
            values,
            kind,
            digits: None,
        })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    /// Decimal resolution the values are known to be rounded to, if any.
    pub fn digits(&self) -> Option<u8> {
        self.digits
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    /// Proximity between objects `i` and `j`. The diagonal is implied:
    /// 0 for distances, 1 for similarities.
    pub fn value(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return match self.kind {
                Kind::Distance => 0.0,
                Kind::Similarity => 1.0,
            };
        }
        let (hi, lo) = if i > j { (i, j) } else { (j, i) };
        self.values[tri_index(hi, lo)]
    }

    /// The packed strict lower triangle, row-major.
    pub fn lower_triangle(&self) -> &[f64] {
        &self.values
    }

    /// Return a copy with every value rounded to `digits` decimal places
    /// (round half to even). Rounding is idempotent: quantizing an
    /// already-quantized matrix at the same resolution is a no-op.
    pub fn quantize(&self, digits: u8) -> Result<Self> {
        if digits > 15 {
            return Err(Error::Matrix(format!(
                "quantization digits must be <= 15, got {digits}"
            )));
        }
        if self.digits == Some(digits) {
            return Ok(self.clone());
        }
        let values = self
            .values
            .iter()
            .map(|&v| quantize_value(v, digits))
            .collect();
        Ok(ProximityMatrix {
            labels: self.labels.clone(),
            values,
            kind: self.kind,
            digits: Some(digits),
        })
    }

    /// Reorder objects by `perm`, where `perm[k]` is the index (in `self`)
    /// of the object placed at position `k`. Labels travel with their rows.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n();
        if perm.len() != n {
            return Err(Error::Matrix(format!(
                "permutation length {} does not match {} objects",
                perm.len(),
                n
            )));
        }
        let mut seen = vec![false; n];
        for &p in perm {
            if p >= n || seen[p] {
                return Err(Error::Matrix("not a permutation".into()));
            }
            seen[p] = true;
        }
        let labels = perm.iter().map(|&p| self.labels[p].clone()).collect();
        let mut values = Vec::with_capacity(self.values.len());
        for i in 1..n {
            for j in 0..i {
                values.push(self.value(perm[i], perm[j]));
            }
        }
        Ok(ProximityMatrix {
            labels,
            values,
            kind: self.kind,
            digits: self.digits,
        })
    }

    /// Serialize to CSV text in the given layout. Floats are written in
    /// shortest round-trip form, so parsing the output reproduces the
    /// stored values bit-exactly.
    pub fn to_csv(&self, format: Format) -> String {
        let n = self.n();
        let mut out = String::new();
        match format {
            Format::SquareCsv => {
                for i in 0..n {
                    let row: Vec<String> =
                        (0..n).map(|j| fmt_f64(self.value(i, j))).collect();
                    out.push_str(&row.join(","));
                    out.push('\n');
                }
            }
            Format::LowerTriangleCsv => {
                for i in 1..n {
                    let row: Vec<String> =
                        (0..i).map(|j| fmt_f64(self.value(i, j))).collect();
                    out.push_str(&row.join(","));
                    out.push('\n');
                }
            }
            Format::LabeledSquareCsv => {
                out.push(',');
                out.push_str(&self.labels.join(","));
                out.push('\n');
                for i in 0..n {
                    out.push_str(&self.labels[i]);
                    for j in 0..n {
                        out.push(',');
                        out.push_str(&fmt_f64(self.value(i, j)));
                    }
                    out.push('\n');
                }
            }
        }
        out
    }
}

fn validate_value(v: f64, kind: Kind) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::Matrix(format!("non-finite value {v}")));
    }
    if v < 0.0 {
        return Err(Error::Matrix(format!("negative value {v}")));
    }
    if kind == Kind::Similarity && v > 1.0 {
        return Err(Error::Matrix(format!(
            "similarity value {v} exceeds 1"
        )));
    }
    Ok(())
}

/// Shortest decimal representation that round-trips to the same f64.
fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Parse proximity text in one of the three CSV layouts.
///
/// Lines starting with `#` and blank lines are ignored; fields are
/// trimmed; the decimal separator is `.`. Square input must be symmetric
/// within 1e-12 relative tolerance and (for distances) have a zero
/// diagonal. Labels default to `1..=n` for the unlabeled layouts.
pub fn parse_proximity(text: &str, format: Format, kind: Kind) -> Result<ProximityMatrix> {
    // Retain original line numbers for error reporting.
    let rows: Vec<(usize, Vec<&str>)> = text
        .lines()
        .enumerate()
        .map(|(ln, l)| (ln + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(ln, l)| (ln, l.split(',').map(str::trim).collect()))
        .collect();
    if rows.is_empty() {
        return Err(Error::parse(1, "no data rows"));
    }
    match format {
        Format::SquareCsv => {
            let cells = parse_numeric_rows(&rows)?;
            square_to_matrix(cells, None, kind, rows[0].0)
        }
        Format::LowerTriangleCsv => {
            let cells = parse_numeric_rows(&rows)?;
            let n = cells.len() + 1;
            let mut values = Vec::with_capacity(n * (n - 1) / 2);
            for (k, row) in cells.iter().enumerate() {
                if row.len() != k + 1 {
                    return Err(Error::parse(
                        rows[k].0,
                        format!("expected {} values in triangle row, got {}", k + 1, row.len()),
                    ));
                }
                values.extend_from_slice(row);
            }
            let labels = (1..=n).map(|i| i.to_string()).collect();
            ProximityMatrix::from_lower(labels, values, kind)
        }
        Format::LabeledSquareCsv => {
            let (header_line, header) = &rows[0];
            if header.len() < 3 {
                return Err(Error::parse(*header_line, "label header too short"));
            }
            // First header field is a corner placeholder (usually empty).
            let labels: Vec<String> = header[1..].iter().map(|s| s.to_string()).collect();
            let n = labels.len();
            let body = &rows[1..];
            if body.len() != n {
                return Err(Error::parse(
                    *header_line,
                    format!("expected {} data rows, got {}", n, body.len()),
                ));
            }
            let mut cells = Vec::with_capacity(n);
            for (i, (line, row)) in body.iter().enumerate() {
                if row.len() != n + 1 {
                    return Err(Error::parse(
                        *line,
                        format!("expected label plus {} values, got {} fields", n, row.len()),
                    ));
                }
                if row[0] != labels[i] {
                    return Err(Error::parse(
                        *line,
                        format!("row label {:?} does not match header label {:?}", row[0], labels[i]),
                    ));
                }
                let mut vals = Vec::with_capacity(n);
                for field in &row[1..] {
                    vals.push(parse_field(field, *line)?);
                }
                cells.push(vals);
            }
            square_to_matrix(cells, Some(labels), kind, *header_line)
        }
    }
}

fn parse_numeric_rows(rows: &[(usize, Vec<&str>)]) -> Result<Vec<Vec<f64>>> {
    rows.iter()
        .map(|(line, fields)| {
            fields
                .iter()
                .map(|f| parse_field(f, *line))
                .collect::<Result<Vec<f64>>>()
        })
        .collect()
}

fn parse_field(field: &str, line: usize) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| Error::parse(line, format!("not a number: {field:?}")))?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("non-finite value: {field:?}")));
    }
    Ok(v)
}

fn square_to_matrix(
    cells: Vec<Vec<f64>>,
    labels: Option<Vec<String>>,
    kind: Kind,
    first_line: usize,
) -> Result<ProximityMatrix> {
    let n = cells.len();
    for row in &cells {
        if row.len() != n {
            return Err(Error::parse(
                first_line,
                format!("square matrix must have {n} values per row, got {}", row.len()),
            ));
        }
    }
    for (i, row) in cells.iter().enumerate() {
        if kind == Kind::Distance && row[i] != 0.0 {
            return Err(Error::Matrix(format!(
                "distance diagonal must be zero, found {} at row {}",
                row[i],
                i + 1
            )));
        }
    }
    for i in 0..n {
        for j in 0..i {
            let a = cells[i][j];
            let b = cells[j][i];
            if a != b && (a - b).abs() > 1e-12 * a.abs().max(b.abs()) {
                return Err(Error::Matrix(format!(
                    "asymmetric input: [{i1},{j1}] = {b} but [{j1},{i1}] = {a}",
                    i1 = j + 1,
                    j1 = i + 1
                )));
            }
        }
    }
    let labels = labels.unwrap_or_else(|| (1..=n).map(|i| i.to_string()).collect());
    let mut values = Vec::with_capacity(n * (n - 1) / 2);
    for i in 1..n {
        for j in 0..i {
            values.push(cells[i][j]);
        }
    }
    ProximityMatrix::from_lower(labels, values, kind)
}
