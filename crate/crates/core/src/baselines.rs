//! Comparator algorithms: Lloyd k-means and its median-of-means variant.
//!
//! Both take the cluster count as input. The MoM variant replaces the full
//! mean update with an update computed from the median-loss block of a
//! fresh random binning each iteration; with a single block covering all
//! points it degenerates to plain k-means on the same generator stream.

use crate::dataset::{squared_distance, DataMatrix};
use crate::error::{Error, Result};
use crate::mom::{lower_median, random_partition};
use crate::rng::Rng;

/// Cluster centers, one per row.
pub type Centroids = DataMatrix;

/// Lloyd k-means with random-point initialization.
///
/// Assignment ties break towards the smaller centroid index; iteration
/// stops when the assignment no longer changes or after `max_iter` updates.
/// A cluster that loses all members is re-seeded to the point farthest from
/// its nearest centroid.
pub fn kmeans(
    x: &DataMatrix,
    k: usize,
    rng: &mut Rng,
    max_iter: usize,
) -> Result<(Centroids, Vec<usize>)> {
    lloyd_core(x, k, rng, max_iter, None)
}

/// Median-of-means k-means: each iteration draws a fresh random partition
/// into blocks of `block_size`, selects the block whose mean k-means loss
/// is the (lower) median, and updates centroids from that block only.
pub fn mom_kmeans(
    x: &DataMatrix,
    k: usize,
    block_size: usize,
    rng: &mut Rng,
    max_iter: usize,
) -> Result<(Centroids, Vec<usize>)> {
    let n = x.n_rows();
    if block_size == 0 || block_size > n {
        return Err(Error::InvalidParam(format!(
            "block size must be in 1..={n}, got {block_size}"
        )));
    }
    lloyd_core(x, k, rng, max_iter, Some(block_size))
}

fn lloyd_core(
    x: &DataMatrix,
    k: usize,
    rng: &mut Rng,
    max_iter: usize,
    block_size: Option<usize>,
) -> Result<(Centroids, Vec<usize>)> {
    let n = x.n_rows();
    let d = x.n_cols();
    if k == 0 || k > n {
        return Err(Error::InvalidParam(format!(
            "k must be in 1..={n}, got {k}"
        )));
    }

    let init = sample_distinct_indices(n, k, rng);
    let mut centroids: Vec<Vec<f64>> = init.iter().map(|&i| x.row(i).to_vec()).collect();
    let mut labels = assign(x, &centroids);

    for _ in 0..max_iter {
        let update_set: Vec<usize> = match block_size {
            None => (0..n).collect(),
            Some(b) => {
                let binning = random_partition(n, b, rng)?;
                let losses: Vec<f64> = binning
                    .blocks()
                    .iter()
                    .map(|block| {
                        block
                            .iter()
                            .map(|&i| nearest(x.row(i), &centroids).1)
                            .sum::<f64>()
                            / block.len() as f64
                    })
                    .collect();
                let (median_idx, _) = lower_median(&losses);
                binning.blocks()[median_idx].clone()
            }
        };

        // Means over the update set, grouped by the current assignment.
        let mut sums = vec![vec![0.0f64; d]; k];
        let mut counts = vec![0usize; k];
        for &i in &update_set {
            let c = labels[i];
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(x.row(i)) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for (cv, s) in centroids[c].iter_mut().zip(&sums[c]) {
                    *cv = s / counts[c] as f64;
                }
            }
        }

        reseed_empty_clusters(x, &mut centroids, &labels);

        let new_labels = assign(x, &centroids);
        if new_labels == labels {
            break;
        }
        labels = new_labels;
    }

    let rows: Vec<f64> = centroids.into_iter().flatten().collect();
    Ok((DataMatrix::new(k, d, rows)?, labels))
}

/// First k slots of a partial Fisher-Yates shuffle: k distinct indices,
/// uniform over subsets, deterministic given the generator.
fn sample_distinct_indices(n: usize, k: usize, rng: &mut Rng) -> Vec<usize> {
    use rand::Rng as _;
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.gen_range(i..n);
        idx.swap(i, j);
    }
    idx.truncate(k);
    idx
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0usize, squared_distance(point, &centroids[0]));
    for (c, centroid) in centroids.iter().enumerate().skip(1) {
        let dist = squared_distance(point, centroid);
        if dist < best.1 {
            best = (c, dist);
        }
    }
    best
}

fn assign(x: &DataMatrix, centroids: &[Vec<f64>]) -> Vec<usize> {
    (0..x.n_rows())
        .map(|i| nearest(x.row(i), centroids).0)
        .collect()
}

/// Clusters empty under the full assignment get their centroid moved to
/// the point farthest from its nearest centroid, one at a time in cluster
/// order; distance ties pick the smaller point index.
fn reseed_empty_clusters(x: &DataMatrix, centroids: &mut [Vec<f64>], labels: &[usize]) {
    let k = centroids.len();
    let mut counts = vec![0usize; k];
    for &l in labels {
        counts[l] += 1;
    }
    let mut taken: Vec<usize> = Vec::new();
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        let mut far = (0usize, f64::MIN);
        for i in 0..x.n_rows() {
            if taken.contains(&i) {
                continue;
            }
            let (_, dist) = nearest(x.row(i), centroids);
            if dist > far.1 {
                far = (i, dist);
            }
        }
        centroids[c] = x.row(far.0).to_vec();
        taken.push(far.0);
    }
}

/// Within-cluster sum of squares of an assignment.
pub fn within_cluster_ss(x: &DataMatrix, centroids: &Centroids, labels: &[usize]) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(i, &c)| squared_distance(x.row(i), centroids.row(c)))
        .sum()
}
