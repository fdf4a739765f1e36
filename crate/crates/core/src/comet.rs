//! COMET: convex clustering with a median-of-means fidelity term, a clipped
//! fusion penalty, and ADAM updates.
//!
//! Each point `x_i` owns an agent `u_i` (initialized at the point). One
//! iteration draws a fresh random binning, selects the median-loss block,
//! and takes an ADAM step on
//!
//! ```text
//! C(U) = 1/(2b) * sum_{i in B} ||x_i - u_i||^2
//!      + gamma/2 * sum_{edges (i,j)} w_ij * min(mu, ||u_i - u_j||^2)
//! ```
//!
//! where `B` is the median block and the edge sum runs over the stored
//! unordered k-NN edges. Clipping at `mu` (squared-distance units) cuts the
//! pull between far agents, so outliers stop attracting clusters. After `N`
//! iterations agents closer than `eta1` are linked and the connected
//! components become clusters; components smaller than half the average
//! size are pooled into a single noise cluster.

use crate::dataset::{squared_distance, DataMatrix, NOISE_LABEL};
use crate::error::{Error, Result};
use crate::graph::{connected_components, knn_weights, threshold_graph, WeightedGraph};
use crate::mom::{median_block, random_partition_into, MedianBlock};
use crate::rng::{derive_seed, rng_from_seed};

/// Stream tag for the per-iteration binning seeds.
const BINNING_STREAM: u64 = 0x42494e;

/// All knobs of the optimizer.
///
/// `mu` is compared against *squared* distances in both the cost and the
/// gradient, so it carries squared-distance units; `eta1` is a plain
/// distance. `alpha`, `beta1`, `beta2` and `eps_adam` are the ADAM
/// constants; the defaults are the usual recommendations with a larger step
/// size since the fidelity gradient is scaled by `1/b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    /// Number of optimizer iterations.
    pub n_iters: usize,
    /// Neighbour count of the k-NN similarity graph.
    pub k_neighbors: usize,
    /// Gaussian kernel bandwidth (>= 0).
    pub phi: f64,
    /// Fusion strength (>= 0).
    pub gamma: f64,
    /// Clip level on squared agent distances (> 0).
    pub mu: f64,
    /// Merge threshold on agent distances for cluster extraction (> 0).
    pub eta1: f64,
    /// Median-of-means block size.
    pub block_size: usize,
    /// ADAM step size (> 0).
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_adam: f64,
    /// Master seed; the per-iteration binnings derive child seeds from it.
    pub seed: u64,
    /// Divide the moments by `1 - beta^t` before the update (the standard
    /// rule). Disable to use the raw moments.
    pub bias_correction: bool,
    /// Drop one block when `floor(n / block_size)` is even, so the median
    /// is unique.
    pub force_odd_blocks: bool,
}

impl Hyperparams {
    /// Defaults with everything except the seed filled in; tune
    /// `k_neighbors`, `gamma`, `mu`, `eta1` and `block_size` per dataset.
    pub fn new(seed: u64) -> Self {
        Self {
            n_iters: 1000,
            k_neighbors: 10,
            phi: 0.5,
            gamma: 5000.0,
            mu: 1.0,
            eta1: 0.5,
            block_size: 100,
            alpha: 0.1,
            beta1: 0.9,
            beta2: 0.999,
            eps_adam: 1e-8,
            seed,
            bias_correction: true,
            force_odd_blocks: true,
        }
    }

    /// Check every range constraint against a dataset of `n` points.
    pub fn validate(&self, n: usize) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidParam(msg));
        if n < 2 {
            return fail("need at least 2 points".into());
        }
        if self.k_neighbors == 0 || self.k_neighbors + 1 > n {
            return fail(format!(
                "k_neighbors must be in 1..={} for {n} points, got {}",
                n - 1,
                self.k_neighbors
            ));
        }
        if self.block_size == 0 || self.block_size > n {
            return fail(format!(
                "block_size must be in 1..={n}, got {}",
                self.block_size
            ));
        }
        if !(self.phi >= 0.0 && self.phi.is_finite()) {
            return fail(format!("phi must be finite and >= 0, got {}", self.phi));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return fail(format!("gamma must be finite and >= 0, got {}", self.gamma));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return fail(format!("mu must be finite and > 0, got {}", self.mu));
        }
        if !(self.eta1 > 0.0 && self.eta1.is_finite()) {
            return fail(format!("eta1 must be finite and > 0, got {}", self.eta1));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return fail(format!("alpha must be finite and > 0, got {}", self.alpha));
        }
        for (name, value) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&value) {
                return fail(format!("{name} must be in [0, 1), got {value}"));
            }
        }
        if self.eps_adam <= 0.0 || self.eps_adam.is_nan() {
            return fail(format!("eps_adam must be > 0, got {}", self.eps_adam));
        }
        Ok(())
    }
}

/// Agent matrix plus ADAM moment accumulators.
#[derive(Debug, Clone)]
pub struct AgentState {
    /// Current agents, same shape as the data.
    pub u: DataMatrix,
    m: Vec<f64>,
    v: Vec<f64>,
    /// Completed update count.
    pub t: usize,
}

impl AgentState {
    /// Agents start at the data, moments at zero.
    pub fn init(x: &DataMatrix) -> Self {
        let len = x.values().len();
        Self {
            u: x.clone(),
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }
}

/// Final labels: non-noise clusters are `0..n_clusters`, pooled small
/// components carry [`NOISE_LABEL`].
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub labels: Vec<i64>,
    pub n_clusters: usize,
    /// Converged agent matrix.
    pub agents: DataMatrix,
}

/// One line of the optional per-iteration trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub median_loss: f64,
    pub cost: f64,
    pub active_edges: usize,
}

/// Objective value for a fixed median block: fidelity over the block plus
/// the clipped fusion penalty `gamma/2 * sum_edges w * min(mu, d^2)`.
pub fn cost(
    u: &DataMatrix,
    x: &DataMatrix,
    median_block_indices: &[usize],
    w: &WeightedGraph,
    gamma: f64,
    mu: f64,
) -> f64 {
    let fidelity = crate::mom::block_loss(x, u, median_block_indices);
    let penalty: f64 = w
        .edges()
        .iter()
        .map(|&(i, j, weight)| weight * squared_distance(u.row(i), u.row(j)).min(mu))
        .sum();
    fidelity + 0.5 * gamma * penalty
}

/// Gradient of [`cost`] with respect to every agent coordinate, flattened
/// row-major. Row `i` is
/// `1/b * (u_i - x_i) * [i in B] + gamma * sum_j w_ij (u_i - u_j) * [d^2 < mu]`
/// with `j` over graph neighbours; the indicator is strict, a subgradient
/// choice at the clip boundary.
pub fn gradient(
    u: &DataMatrix,
    x: &DataMatrix,
    median_block_indices: &[usize],
    w: &WeightedGraph,
    gamma: f64,
    mu: f64,
    block_size: usize,
) -> Vec<f64> {
    let d = u.n_cols();
    let mut g = vec![0.0; u.values().len()];

    let inv_b = 1.0 / block_size as f64;
    for &i in median_block_indices {
        let (ui, xi) = (u.row(i), x.row(i));
        for c in 0..d {
            g[i * d + c] += inv_b * (ui[c] - xi[c]);
        }
    }

    if gamma > 0.0 {
        for &(i, j, weight) in w.edges() {
            let (ui, uj) = (u.row(i), u.row(j));
            if squared_distance(ui, uj) < mu {
                let gw = gamma * weight;
                for c in 0..d {
                    let pull = gw * (ui[c] - uj[c]);
                    g[i * d + c] += pull;
                    g[j * d + c] -= pull;
                }
            }
        }
    }
    g
}

/// Number of graph edges whose agent distance is below the clip level.
pub fn active_edge_count(u: &DataMatrix, w: &WeightedGraph, mu: f64) -> usize {
    w.edges()
        .iter()
        .filter(|&&(i, j, _)| squared_distance(u.row(i), u.row(j)) < mu)
        .count()
}

/// One ADAM update:
/// `m <- beta1*m + (1-beta1)*g`, `v <- beta2*v + (1-beta2)*g.^2`,
/// bias-corrected by `1 - beta^(t+1)`, then
/// `u <- u - alpha * m_hat / sqrt(v_hat + eps)` (`eps` inside the root).
pub fn adam_step(state: &mut AgentState, g: &[f64], h: &Hyperparams) {
    assert_eq!(g.len(), state.m.len(), "gradient shape mismatch");
    let t = state.t + 1;
    let (bc1, bc2) = if h.bias_correction {
        (1.0 - h.beta1.powi(t as i32), 1.0 - h.beta2.powi(t as i32))
    } else {
        (1.0, 1.0)
    };
    let u = state.u.values().to_vec();
    let mut next = Vec::with_capacity(u.len());
    for idx in 0..u.len() {
        state.m[idx] = h.beta1 * state.m[idx] + (1.0 - h.beta1) * g[idx];
        state.v[idx] = h.beta2 * state.v[idx] + (1.0 - h.beta2) * g[idx] * g[idx];
        let m_hat = state.m[idx] / bc1;
        let v_hat = state.v[idx] / bc2;
        next.push(u[idx] - h.alpha * m_hat / (v_hat + h.eps_adam).sqrt());
    }
    state.u = DataMatrix::new(state.u.n_rows(), state.u.n_cols(), next).expect("finite update");
    state.t = t;
}

/// A prepared optimization run: the k-NN graph is frozen at construction
/// and iterations can be stepped, traced, timed, or reset for restarts.
pub struct Optimizer<'a> {
    x: &'a DataMatrix,
    graph: WeightedGraph,
    state: AgentState,
    params: Hyperparams,
    num_blocks: usize,
}

impl<'a> Optimizer<'a> {
    pub fn new(x: &'a DataMatrix, params: Hyperparams) -> Result<Self> {
        params.validate(x.n_rows())?;
        let graph = knn_weights(x, params.k_neighbors, params.phi)?;
        let mut num_blocks = x.n_rows() / params.block_size;
        if params.force_odd_blocks && num_blocks > 1 && num_blocks.is_multiple_of(2) {
            num_blocks -= 1;
        }
        Ok(Self {
            x,
            graph,
            state: AgentState::init(x),
            params,
            num_blocks,
        })
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn state(&self) -> &AgentState {
        &self.state
    }

    pub fn num_blocks(&self) -> usize {
        self.num_blocks
    }

    /// Restore the initial state (agents at the data, moments zero) while
    /// keeping the frozen graph.
    pub fn reset(&mut self) {
        self.state = AgentState::init(self.x);
    }

    /// One iteration: fresh binning, median block, gradient, ADAM step.
    /// Returns the selected block.
    pub fn step(&mut self) -> MedianBlock {
        let t = self.state.t;
        let mut rng = rng_from_seed(derive_seed(self.params.seed, &[BINNING_STREAM, t as u64]));
        let binning = random_partition_into(
            self.x.n_rows(),
            self.params.block_size,
            self.num_blocks,
            &mut rng,
        )
        .expect("validated block geometry");
        let mb = median_block(self.x, &self.state.u, &binning);
        let g = gradient(
            &self.state.u,
            self.x,
            &binning.blocks()[mb.index],
            &self.graph,
            self.params.gamma,
            self.params.mu,
            self.params.block_size,
        );
        adam_step(&mut self.state, &g, &self.params);
        mb
    }

    /// Run `iters` plain iterations.
    pub fn run(&mut self, iters: usize) {
        for _ in 0..iters {
            self.step();
        }
    }

    /// Run `iters` iterations recording a [`TraceRow`] per iteration. The
    /// trace costs an extra objective evaluation per iteration.
    pub fn run_traced(&mut self, iters: usize, trace: &mut Vec<TraceRow>) {
        for _ in 0..iters {
            let iteration = self.state.t;
            let mb = self.step();
            trace.push(TraceRow {
                iteration,
                median_loss: mb.loss,
                cost: mb.loss
                    + 0.5
                        * self.params.gamma
                        * self
                            .graph
                            .edges()
                            .iter()
                            .map(|&(i, j, w)| {
                                w * squared_distance(self.state.u.row(i), self.state.u.row(j))
                                    .min(self.params.mu)
                            })
                            .sum::<f64>(),
                active_edges: active_edge_count(&self.state.u, &self.graph, self.params.mu),
            });
        }
    }

    /// Threshold the current agents and pool undersized components.
    pub fn finish(&self) -> ClusterAssignment {
        extract_clusters(&self.state.u, self.params.eta1)
    }
}

/// Full pipeline: build the graph, run `n_iters` ADAM iterations, extract
/// clusters. Deterministic given the seed.
pub fn fit(x: &DataMatrix, params: &Hyperparams) -> Result<ClusterAssignment> {
    let mut opt = Optimizer::new(x, params.clone())?;
    opt.run(params.n_iters);
    Ok(opt.finish())
}

/// [`fit`] that also returns the per-iteration trace.
pub fn fit_with_trace(
    x: &DataMatrix,
    params: &Hyperparams,
) -> Result<(ClusterAssignment, Vec<TraceRow>)> {
    let mut opt = Optimizer::new(x, params.clone())?;
    let mut trace = Vec::with_capacity(params.n_iters);
    opt.run_traced(params.n_iters, &mut trace);
    Ok((opt.finish(), trace))
}

/// Link agents closer than `eta1`, label connected components, and relabel
/// every component smaller than half the average component size to the
/// single noise label.
pub fn extract_clusters(u: &DataMatrix, eta1: f64) -> ClusterAssignment {
    let n = u.n_rows();
    let components = connected_components(&threshold_graph(u, eta1));
    let n_components = components.iter().max().map_or(0, |&m| m + 1);
    let mut sizes = vec![0usize; n_components];
    for &c in &components {
        sizes[c] += 1;
    }

    let average = n as f64 / n_components as f64;
    let mut relabel = vec![NOISE_LABEL; n_components];
    let mut n_clusters = 0usize;
    for (c, &size) in sizes.iter().enumerate() {
        if (size as f64) >= average / 2.0 {
            relabel[c] = n_clusters as i64;
            n_clusters += 1;
        }
    }

    let labels = components.iter().map(|&c| relabel[c]).collect();
    ClusterAssignment {
        labels,
        n_clusters,
        agents: u.clone(),
    }
}
