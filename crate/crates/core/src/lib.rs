//! Robust convex clustering with a median-of-means fidelity term.
//!
//! Every point owns an agent; a clipped, Gaussian-weighted fusion penalty
//! over a k-NN graph pulls nearby agents together while the median-of-means
//! block selection keeps contaminated points from steering the fit. Agents
//! that end up close are merged into clusters and undersized components are
//! pooled into a single noise cluster, so the cluster count comes out of
//! the optimization instead of being an input.
//!
//! The crate also ships the evaluation stack used to benchmark the method:
//! synthetic generators and uniform box contamination ([`dataset`]),
//! chance-corrected agreement scores and a Monte Carlo rank-sum test
//! ([`metrics`]), and k-means style comparators ([`baselines`]).
//!
//! ```
//! use comet_core::comet::{fit, Hyperparams};
//! use comet_core::dataset::gen_blobs;
//! use comet_core::rng::rng_from_seed;
//!
//! let mut rng = rng_from_seed(0);
//! let centers = vec![vec![0.0, 0.0], vec![10.0, 0.0]];
//! let ds = gen_blobs(40, &centers, &mut rng).unwrap();
//!
//! let mut params = Hyperparams::new(7);
//! params.n_iters = 200;
//! params.k_neighbors = 6;
//! params.block_size = 8;
//! let result = fit(&ds.data, &params).unwrap();
//! assert_eq!(result.n_clusters, 2);
//! ```

pub mod baselines;
pub mod comet;
pub mod dataset;
pub mod error;
pub mod graph;
pub mod metrics;
pub mod mom;
pub mod rng;

pub use error::{Error, Result};
