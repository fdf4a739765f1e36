//! Dataset loading, synthetic generators, and uniform contamination.
//!
//! The tabular input format is delimiter-separated text (comma or tab,
//! auto-detected from the first line), one point per row, with an optional
//! trailing integer label column and an optional header row that is skipped
//! when none of its cells are numeric. Contamination rows carry the reserved
//! label [`NOISE_LABEL`] in files.

use std::f64::consts::{PI, TAU};
use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Label reserved for contamination rows, both internally and in files.
pub const NOISE_LABEL: i64 = -1;

/// Row-major matrix of real-valued observations; each row is one point.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    /// Build from a flat row-major buffer.
    ///
    /// The matrix must be at least 1x1 and every value must be finite.
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParam(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if values.len() != rows * cols {
            return Err(Error::InvalidParam(format!(
                "buffer length {} does not match {rows}x{cols}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "non-finite value at row {}, column {}",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Self { rows, cols, values })
    }

    /// Build from a slice of equally sized rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidParam("matrix needs at least one row".into()));
        }
        let cols = rows[0].len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
            return Err(Error::InvalidParam(format!(
                "row {i} has {} columns, expected {cols}",
                r.len()
            )));
        }
        let values: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(rows.len(), cols, values)
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Squared Euclidean distance between two points of equal dimension.
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(p, q)| {
            let d = p - q;
            d * d
        })
        .sum()
}

/// A data matrix with per-row class labels and contamination flags.
///
/// `is_noise[i]` is true exactly when `labels[i] == NOISE_LABEL`; generator
/// outputs start with all-false flags and contamination is added by
/// [`inject_noise`].
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub data: DataMatrix,
    pub labels: Vec<i64>,
    pub is_noise: Vec<bool>,
}

impl LabeledDataset {
    pub fn new(data: DataMatrix, labels: Vec<i64>, is_noise: Vec<bool>) -> Result<Self> {
        if labels.len() != data.n_rows() || is_noise.len() != data.n_rows() {
            return Err(Error::InvalidParam(format!(
                "labels ({}) and noise flags ({}) must match row count ({})",
                labels.len(),
                is_noise.len(),
                data.n_rows()
            )));
        }
        if let Some(i) = labels
            .iter()
            .zip(&is_noise)
            .position(|(&l, &f)| f != (l == NOISE_LABEL))
        {
            return Err(Error::InvalidParam(format!(
                "row {i}: noise flag inconsistent with label {}",
                labels[i]
            )));
        }
        Ok(Self {
            data,
            labels,
            is_noise,
        })
    }

    /// Wrap a plain matrix with all rows labeled 0.
    pub fn unlabeled(data: DataMatrix) -> Self {
        let n = data.n_rows();
        Self {
            data,
            labels: vec![0; n],
            is_noise: vec![false; n],
        }
    }

    pub fn n_points(&self) -> usize {
        self.data.n_rows()
    }

    /// Number of rows not flagged as contamination.
    pub fn n_original(&self) -> usize {
        self.is_noise.iter().filter(|&&f| !f).count()
    }
}

/// Load a delimiter-separated table, optionally taking one column as labels.
///
/// `label_column` is a 0-based column index; when absent, all labels are 0.
/// Rows whose label equals [`NOISE_LABEL`] are flagged as contamination.
pub fn load_table(path: &Path, label_column: Option<usize>) -> Result<LabeledDataset> {
    let text = fs::read_to_string(path)?;
    parse_table(&text, label_column, path)
}

fn parse_table(text: &str, label_column: Option<usize>, path: &Path) -> Result<LabeledDataset> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();
    let Some(&(_, first)) = lines.first() else {
        return Err(Error::EmptyInput {
            path: path.to_path_buf(),
        });
    };
    let delim = if first.contains('\t') { '\t' } else { ',' };

    // A first row where no cell is numeric is a header and is skipped.
    let header_cells: Vec<&str> = first.split(delim).map(str::trim).collect();
    let is_header = header_cells.iter().all(|c| c.parse::<f64>().is_err());
    let data_lines = if is_header { &lines[1..] } else { &lines[..] };
    if data_lines.is_empty() {
        return Err(Error::EmptyInput {
            path: path.to_path_buf(),
        });
    }

    let width = data_lines[0].1.split(delim).count();
    if let Some(col) = label_column {
        if col >= width {
            return Err(Error::LabelColumnOutOfRange { column: col, width });
        }
    }
    let dim = width - usize::from(label_column.is_some());
    if dim == 0 {
        return Err(Error::InvalidParam(
            "input has no feature columns besides the label".into(),
        ));
    }

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(data_lines.len());
    let mut labels: Vec<i64> = Vec::with_capacity(data_lines.len());
    for &(line_no, line) in data_lines {
        let cells: Vec<&str> = line.split(delim).map(str::trim).collect();
        if cells.len() != width {
            return Err(Error::RaggedRow {
                path: path.to_path_buf(),
                row: line_no,
                got: cells.len(),
                expected: width,
            });
        }
        let mut point = Vec::with_capacity(dim);
        let mut label = 0i64;
        for (c, cell) in cells.iter().enumerate() {
            let parse_err = || Error::ParseCell {
                path: path.to_path_buf(),
                row: line_no,
                col: c + 1,
                value: (*cell).to_string(),
            };
            let value: f64 = cell.parse().map_err(|_| parse_err())?;
            if !value.is_finite() {
                return Err(parse_err());
            }
            if label_column == Some(c) {
                if value.fract() != 0.0 || value.abs() > i64::MAX as f64 {
                    return Err(parse_err());
                }
                label = value as i64;
            } else {
                point.push(value);
            }
        }
        rows.push(point);
        labels.push(label);
    }

    let is_noise: Vec<bool> = labels.iter().map(|&l| l == NOISE_LABEL).collect();
    LabeledDataset::new(DataMatrix::from_rows(&rows)?, labels, is_noise)
}

/// Write a dataset in the same format [`load_table`] reads: comma-separated
/// features with a trailing label column, contamination rows labeled
/// [`NOISE_LABEL`]. Reloading with `label_column = Some(d)` round-trips
/// exactly.
pub fn save_table(ds: &LabeledDataset, path: &Path) -> Result<()> {
    let mut out = String::new();
    for i in 0..ds.n_points() {
        for v in ds.data.row(i) {
            out.push_str(&v.to_string());
            out.push(',');
        }
        out.push_str(&ds.labels[i].to_string());
        out.push('\n');
    }
    let mut file = fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

/// Draw `n_per_cluster` points from an isotropic unit-variance Gaussian
/// around each center; labels are the center index.
pub fn gen_blobs(
    n_per_cluster: usize,
    centers: &[Vec<f64>],
    rng: &mut Rng,
) -> Result<LabeledDataset> {
    if centers.is_empty() {
        return Err(Error::InvalidParam(
            "gen_blobs needs at least one center".into(),
        ));
    }
    if n_per_cluster == 0 {
        return Err(Error::InvalidParam(
            "n_per_cluster must be at least 1".into(),
        ));
    }
    let dim = centers[0].len();
    if dim == 0 || centers.iter().any(|c| c.len() != dim) {
        return Err(Error::InvalidParam(
            "centers must be non-empty points of equal dimension".into(),
        ));
    }
    let mut rows = Vec::with_capacity(n_per_cluster * centers.len());
    let mut labels = Vec::with_capacity(n_per_cluster * centers.len());
    for (idx, center) in centers.iter().enumerate() {
        for _ in 0..n_per_cluster {
            let point: Vec<f64> = center
                .iter()
                .map(|&c| c + rng.sample::<f64, _>(StandardNormal))
                .collect();
            rows.push(point);
            labels.push(idx as i64);
        }
    }
    let n = rows.len();
    LabeledDataset::new(DataMatrix::from_rows(&rows)?, labels, vec![false; n])
}

/// Two concentric circles in the plane: `n_per_circle` points on radius
/// `r_outer` (label 0) and on radius `r_inner` (label 1).
///
/// Angles are jittered-uniform: evenly spaced slots with a uniform offset
/// inside each slot, which keeps coverage even at small counts. Points lie
/// exactly on their circle up to floating rounding.
pub fn gen_circles(
    n_per_circle: usize,
    r_outer: f64,
    r_inner: f64,
    rng: &mut Rng,
) -> Result<LabeledDataset> {
    if n_per_circle == 0 {
        return Err(Error::InvalidParam(
            "n_per_circle must be at least 1".into(),
        ));
    }
    if !(r_inner > 0.0 && r_inner < r_outer && r_outer.is_finite()) {
        return Err(Error::InvalidParam(format!(
            "need 0 < r_inner < r_outer, got r_inner={r_inner}, r_outer={r_outer}"
        )));
    }
    let mut rows = Vec::with_capacity(2 * n_per_circle);
    let mut labels = Vec::with_capacity(2 * n_per_circle);
    for (label, radius) in [(0i64, r_outer), (1i64, r_inner)] {
        for i in 0..n_per_circle {
            let theta = TAU * (i as f64 + rng.gen::<f64>()) / n_per_circle as f64;
            rows.push(vec![radius * theta.cos(), radius * theta.sin()]);
            labels.push(label);
        }
    }
    let n = rows.len();
    LabeledDataset::new(DataMatrix::from_rows(&rows)?, labels, vec![false; n])
}

/// Two interleaving half-moons in the plane, `n_total` points split evenly
/// (the upper moon takes the extra point when `n_total` is odd).
///
/// The upper moon is the unit upper half-circle; the lower moon is a
/// half-circle shifted right by 1 and down by 0.5, opening upward. Angles
/// are jittered-uniform over [0, pi], so every point lies exactly on its
/// arc. Labels: 0 upper, 1 lower.
pub fn gen_moons(n_total: usize, rng: &mut Rng) -> Result<LabeledDataset> {
    if n_total < 2 {
        return Err(Error::InvalidParam(
            "gen_moons needs at least 2 points".into(),
        ));
    }
    let n_upper = n_total - n_total / 2;
    let n_lower = n_total / 2;
    let mut rows = Vec::with_capacity(n_total);
    let mut labels = Vec::with_capacity(n_total);
    for i in 0..n_upper {
        let theta = PI * (i as f64 + rng.gen::<f64>()) / n_upper as f64;
        rows.push(vec![theta.cos(), theta.sin()]);
        labels.push(0);
    }
    for i in 0..n_lower {
        let theta = PI * (i as f64 + rng.gen::<f64>()) / n_lower as f64;
        rows.push(vec![1.0 - theta.cos(), 0.5 - theta.sin()]);
        labels.push(1);
    }
    LabeledDataset::new(DataMatrix::from_rows(&rows)?, labels, vec![false; n_total])
}

/// Append `floor(n * p / 100)` contamination points drawn uniformly from the
/// coordinate-wise bounding box of the input rows.
///
/// Input rows are kept unchanged and first in order; appended rows carry
/// [`NOISE_LABEL`] and `is_noise = true`. A zero-width box side (a constant
/// column) yields that constant.
pub fn inject_noise(ds: &LabeledDataset, p_percent: f64, rng: &mut Rng) -> LabeledDataset {
    assert!(
        p_percent >= 0.0 && p_percent.is_finite(),
        "noise percentage must be finite and non-negative"
    );
    let n = ds.n_points();
    let d = ds.data.n_cols();
    let n_noise = (n as f64 * p_percent / 100.0).floor() as usize;
    if n_noise == 0 {
        return ds.clone();
    }

    let mut lo = ds.data.row(0).to_vec();
    let mut hi = ds.data.row(0).to_vec();
    for i in 1..n {
        for (j, &v) in ds.data.row(i).iter().enumerate() {
            lo[j] = lo[j].min(v);
            hi[j] = hi[j].max(v);
        }
    }

    let mut values = ds.data.values().to_vec();
    let mut labels = ds.labels.clone();
    let mut is_noise = ds.is_noise.clone();
    for _ in 0..n_noise {
        for j in 0..d {
            values.push(lo[j] + rng.gen::<f64>() * (hi[j] - lo[j]));
        }
        labels.push(NOISE_LABEL);
        is_noise.push(true);
    }
    let data = DataMatrix::new(n + n_noise, d, values).expect("finite box draw");
    LabeledDataset {
        data,
        labels,
        is_noise,
    }
}
