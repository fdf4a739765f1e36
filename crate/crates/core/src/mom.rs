//! Random binning and median-block selection.
//!
//! The median-of-means device: indices are split into `l` equal blocks, the
//! per-block mean fidelity losses are computed, and only the block whose
//! loss is the (lower) median drives the fidelity gradient. Fewer than
//! `ceil(l/2)` contaminated blocks cannot move the selected loss beyond the
//! clean blocks' range.

use rand::seq::SliceRandom;

use crate::dataset::{squared_distance, DataMatrix};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// A random partition of `0..n` into equal blocks plus a discarded remainder.
#[derive(Debug, Clone, PartialEq)]
pub struct Binning {
    blocks: Vec<Vec<usize>>,
    discarded: Vec<usize>,
}

impl Binning {
    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn discarded(&self) -> &[usize] {
        &self.discarded
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_size(&self) -> usize {
        self.blocks[0].len()
    }
}

/// Cut a uniformly random permutation of `0..n` into `floor(n / block_size)`
/// blocks of `block_size`, discarding the remainder.
pub fn random_partition(n: usize, block_size: usize, rng: &mut Rng) -> Result<Binning> {
    if block_size == 0 || block_size > n {
        return Err(Error::InvalidParam(format!(
            "block size must be in 1..={n}, got {block_size}"
        )));
    }
    random_partition_into(n, block_size, n / block_size, rng)
}

/// Same as [`random_partition`] but with an explicit block count, so callers
/// can discard extra indices (e.g. to keep the block count odd).
pub fn random_partition_into(
    n: usize,
    block_size: usize,
    num_blocks: usize,
    rng: &mut Rng,
) -> Result<Binning> {
    if block_size == 0 || num_blocks == 0 || num_blocks * block_size > n {
        return Err(Error::InvalidParam(format!(
            "{num_blocks} blocks of {block_size} do not fit into {n} indices"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut blocks: Vec<Vec<usize>> = perm
        .chunks_exact(block_size)
        .take(num_blocks)
        .map(|c| c.to_vec())
        .collect();
    let mut discarded: Vec<usize> = perm[num_blocks * block_size..].to_vec();
    // Sorted indices give every consumer a fixed summation order.
    for block in &mut blocks {
        block.sort_unstable();
    }
    discarded.sort_unstable();
    Ok(Binning { blocks, discarded })
}

/// Mean squared fidelity loss of a block: `1/(2b) * sum ||x_i - u_i||^2`.
pub fn block_loss(x: &DataMatrix, u: &DataMatrix, block: &[usize]) -> f64 {
    debug_assert!(!block.is_empty());
    let sum: f64 = block
        .iter()
        .map(|&i| squared_distance(x.row(i), u.row(i)))
        .sum();
    sum / (2.0 * block.len() as f64)
}

/// The block selected by the median rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedianBlock {
    /// 0-based position of the block within the binning.
    pub index: usize,
    pub loss: f64,
}

/// Lower median of a loss vector: the `ceil(l/2)`-th smallest value, with
/// ties broken towards the smaller index. The result is always an actual
/// element, so the selected index is well defined.
pub fn lower_median(losses: &[f64]) -> (usize, f64) {
    assert!(!losses.is_empty(), "median of an empty loss vector");
    let mut sorted = losses.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let value = sorted[(sorted.len() - 1) / 2];
    let index = losses
        .iter()
        .position(|&v| v == value)
        .expect("median value is an element");
    (index, value)
}

/// Compute all block losses and select the lower-median block.
pub fn median_block(x: &DataMatrix, u: &DataMatrix, binning: &Binning) -> MedianBlock {
    let losses: Vec<f64> = binning
        .blocks()
        .iter()
        .map(|b| block_loss(x, u, b))
        .collect();
    let (index, loss) = lower_median(&losses);
    MedianBlock { index, loss }
}
