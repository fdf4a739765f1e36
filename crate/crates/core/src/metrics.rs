//! External clustering metrics and significance testing.
//!
//! ARI and AMI are chance-corrected partition agreement scores computed
//! from the contingency table; when a dataset carries contamination flags,
//! [`evaluate_on_originals`] scores the uncontaminated rows only. The
//! Wilcoxon rank-sum test estimates its p-value by Monte Carlo permutation.

use rand::seq::SliceRandom;

use crate::comet::ClusterAssignment;
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Cross-tabulation of two labelings over the same items.
///
/// Distinct label values are indexed in first-occurrence order; the actual
/// values never matter to the metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct ContingencyTable {
    counts: Vec<Vec<usize>>,
    row_marginals: Vec<usize>,
    col_marginals: Vec<usize>,
    n: usize,
}

impl ContingencyTable {
    pub fn from_labels(truth: &[i64], pred: &[i64]) -> Result<Self> {
        if truth.len() != pred.len() {
            return Err(Error::InvalidParam(format!(
                "label vectors differ in length: {} vs {}",
                truth.len(),
                pred.len()
            )));
        }
        if truth.len() < 2 {
            return Err(Error::InvalidParam("need at least 2 labeled items".into()));
        }
        let rows = index_labels(truth);
        let cols = index_labels(pred);
        let r = rows.iter().max().unwrap() + 1;
        let c = cols.iter().max().unwrap() + 1;
        let mut counts = vec![vec![0usize; c]; r];
        for (&u, &v) in rows.iter().zip(&cols) {
            counts[u][v] += 1;
        }
        let row_marginals: Vec<usize> = counts.iter().map(|r| r.iter().sum()).collect();
        let col_marginals: Vec<usize> = (0..c).map(|j| counts.iter().map(|r| r[j]).sum()).collect();
        Ok(Self {
            counts,
            row_marginals,
            col_marginals,
            n: truth.len(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn counts(&self) -> &[Vec<usize>] {
        &self.counts
    }

    pub fn row_marginals(&self) -> &[usize] {
        &self.row_marginals
    }

    pub fn col_marginals(&self) -> &[usize] {
        &self.col_marginals
    }
}

fn index_labels(labels: &[i64]) -> Vec<usize> {
    let mut seen: Vec<i64> = Vec::new();
    labels
        .iter()
        .map(|&l| {
            if let Some(pos) = seen.iter().position(|&s| s == l) {
                pos
            } else {
                seen.push(l);
                seen.len() - 1
            }
        })
        .collect()
}

fn comb2(n: usize) -> f64 {
    (n as f64) * (n as f64 - 1.0) / 2.0
}

/// Adjusted Rand index in [-1, 1]; 1 means identical partitions.
///
/// When the denominator degenerates to zero (both partitions trivial and
/// identical: all singletons or a single cluster on each side), returns 1
/// by convention.
pub fn ari(truth: &[i64], pred: &[i64]) -> Result<f64> {
    let table = ContingencyTable::from_labels(truth, pred)?;
    let sum_cells: f64 = table.counts().iter().flatten().map(|&c| comb2(c)).sum();
    let sum_rows: f64 = table.row_marginals().iter().map(|&a| comb2(a)).sum();
    let sum_cols: f64 = table.col_marginals().iter().map(|&b| comb2(b)).sum();
    let expected = sum_rows * sum_cols / comb2(table.n());
    let max_index = 0.5 * (sum_rows + sum_cols);
    if max_index == expected {
        return Ok(1.0);
    }
    Ok((sum_cells - expected) / (max_index - expected))
}

fn entropy(marginals: &[usize], n: usize) -> f64 {
    marginals
        .iter()
        .filter(|&&m| m > 0)
        .map(|&m| {
            let p = m as f64 / n as f64;
            -p * p.ln()
        })
        .sum()
}

fn mutual_information(table: &ContingencyTable) -> f64 {
    let n = table.n() as f64;
    let mut mi = 0.0;
    for (u, row) in table.counts().iter().enumerate() {
        for (v, &c) in row.iter().enumerate() {
            if c > 0 {
                let p = c as f64 / n;
                mi += p
                    * (n * c as f64
                        / (table.row_marginals()[u] as f64 * table.col_marginals()[v] as f64))
                        .ln();
            }
        }
    }
    mi
}

/// Expected mutual information of two random labelings with the table's
/// marginals, under the hypergeometric model. Natural-log units.
pub fn expected_mutual_information(table: &ContingencyTable) -> f64 {
    let n = table.n();
    let nf = n as f64;
    // ln(k!) for k in 0..=n.
    let mut ln_fact = vec![0.0f64; n + 1];
    for k in 1..=n {
        ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
    }

    let mut emi = 0.0;
    for &a in table.row_marginals() {
        for &b in table.col_marginals() {
            let lo = if a + b > n { a + b - n } else { 1 }.max(1);
            let hi = a.min(b);
            for nij in lo..=hi {
                // Hypergeometric probability of the cell holding nij items.
                let ln_p = ln_fact[a] + ln_fact[b] + ln_fact[n - a] + ln_fact[n - b]
                    - ln_fact[n]
                    - ln_fact[nij]
                    - ln_fact[a - nij]
                    - ln_fact[b - nij]
                    - ln_fact[n + nij - a - b];
                let term = (nij as f64 / nf) * ((nf * nij as f64).ln() - ((a * b) as f64).ln());
                emi += term * ln_p.exp();
            }
        }
    }
    emi
}

/// Adjusted mutual information with the arithmetic-mean normalizer:
/// `(MI - E[MI]) / (mean(H_truth, H_pred) - E[MI])`.
///
/// When the denominator is zero both partitions are trivial: returns 1 if
/// they are identical as partitions, else 0.
pub fn ami(truth: &[i64], pred: &[i64]) -> Result<f64> {
    let table = ContingencyTable::from_labels(truth, pred)?;
    let h_truth = entropy(table.row_marginals(), table.n());
    let h_pred = entropy(table.col_marginals(), table.n());
    let mi = mutual_information(&table);
    let emi = expected_mutual_information(&table);
    let denom = 0.5 * (h_truth + h_pred) - emi;
    if denom.abs() < 1e-12 {
        let identical = index_labels(truth) == index_labels(pred);
        return Ok(if identical { 1.0 } else { 0.0 });
    }
    Ok((mi - emi) / denom)
}

/// Scores for one clustering run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub ari: f64,
    pub ami: f64,
    /// Number of non-noise clusters reported by the algorithm, counted over
    /// all points including contamination.
    pub k_star: usize,
}

/// Score a prediction against the ground truth of the uncontaminated rows
/// only. The predicted noise label participates as an ordinary cluster
/// label, so original points wrongly flagged as noise are penalized.
pub fn evaluate_on_originals(
    ds: &LabeledDataset,
    pred_labels: &[i64],
    n_clusters: usize,
) -> Result<Evaluation> {
    if pred_labels.len() != ds.n_points() {
        return Err(Error::InvalidParam(format!(
            "prediction covers {} rows, dataset has {}",
            pred_labels.len(),
            ds.n_points()
        )));
    }
    let mut truth = Vec::with_capacity(ds.n_original());
    let mut pred = Vec::with_capacity(ds.n_original());
    for ((&flag, &t), &p) in ds.is_noise.iter().zip(&ds.labels).zip(pred_labels) {
        if !flag {
            truth.push(t);
            pred.push(p);
        }
    }
    Ok(Evaluation {
        ari: ari(&truth, &pred)?,
        ami: ami(&truth, &pred)?,
        k_star: n_clusters,
    })
}

/// Convenience wrapper over a [`ClusterAssignment`].
pub fn evaluate_assignment(ds: &LabeledDataset, pred: &ClusterAssignment) -> Result<Evaluation> {
    evaluate_on_originals(ds, &pred.labels, pred.n_clusters)
}

/// One-sided Wilcoxon rank-sum test of "sample `a` is stochastically
/// larger than `b`", with mid-ranks for ties.
///
/// The p-value is estimated over `n_mc` uniformly random permutations of
/// the pooled group labels as `(1 + #{stat >= observed}) / (n_mc + 1)`.
pub fn wilcoxon_rank_sum_mc(a: &[f64], b: &[f64], n_mc: usize, rng: &mut Rng) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidParam("both samples must be nonempty".into()));
    }
    if n_mc < 1000 {
        return Err(Error::InvalidParam(format!(
            "n_mc must be at least 1000, got {n_mc}"
        )));
    }
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let mut ranks = midranks(&pooled);
    let observed: f64 = ranks[..a.len()].iter().sum();

    let mut exceed = 0usize;
    for _ in 0..n_mc {
        ranks.shuffle(rng);
        let stat: f64 = ranks[..a.len()].iter().sum();
        if stat >= observed {
            exceed += 1;
        }
    }
    Ok((1 + exceed) as f64 / (n_mc + 1) as f64)
}

/// 1-based ranks with ties sharing their mid-rank.
fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_unstable_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start..end (0-based) share the average 1-based rank.
        let mid = (start + end + 1) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = mid;
        }
        start = end;
    }
    ranks
}
