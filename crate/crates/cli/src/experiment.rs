//! Experiment execution: contamination sweeps, restarts, aggregation, and
//! pairwise significance tests.
//!
//! Child seeds derive from the master seed through
//! [`comet_core::rng::derive_seed`] with a purpose tag, the noise level's
//! bit pattern, and the restart index, so every run is independent yet the
//! whole sweep is reproducible from one seed.

use std::time::Instant;

use anyhow::{bail, Context, Result};
use comet_core::baselines::{kmeans, mom_kmeans};
use comet_core::comet;
use comet_core::dataset::{
    gen_blobs, gen_circles, gen_moons, inject_noise, load_table, LabeledDataset,
};
use comet_core::metrics::{evaluate_on_originals, wilcoxon_rank_sum_mc};
use comet_core::rng::{derive_seed, rng_from_seed};

use crate::config::{default_block_size, AlgorithmConfig, DatasetSource, ExperimentConfig};

/// Stream tags for child-seed derivation.
pub const SEED_TAG_DATASET: u64 = 1;
pub const SEED_TAG_NOISE: u64 = 2;
pub const SEED_TAG_ALGO: u64 = 3;
pub const SEED_TAG_COMPARE: u64 = 4;

/// Scores of a single (noise level, restart) run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub algorithm: String,
    pub noise_percent: f64,
    pub restart: usize,
    pub ari: f64,
    pub ami: f64,
    pub k_star: usize,
    pub wall_secs: f64,
}

/// Aggregated scores of one (algorithm, noise level) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub algorithm: String,
    pub noise_percent: f64,
    pub restarts: usize,
    pub ari_mean: f64,
    pub ari_std: f64,
    pub ami_mean: f64,
    pub ami_std: f64,
    pub kstar_mean: f64,
    pub kstar_std: f64,
    pub wall_secs_total: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub runs: Vec<RunRecord>,
    /// Configuration echo for output file headers, with the block size
    /// resolved against the dataset.
    pub provenance: Vec<String>,
}

/// Load or generate the base dataset of a config. Generated datasets use a
/// child stream of the master seed, so the same seed always yields the same
/// base data.
pub fn load_base_dataset(cfg: &ExperimentConfig, seed: u64) -> Result<LabeledDataset> {
    let mut rng = rng_from_seed(derive_seed(seed, &[SEED_TAG_DATASET]));
    let ds = match &cfg.dataset {
        DatasetSource::File { path, label_column } => load_table(path, *label_column)
            .with_context(|| format!("loading {}", path.display()))?,
        DatasetSource::Blobs {
            n_per_cluster,
            centers,
        } => gen_blobs(*n_per_cluster, centers, &mut rng)?,
        DatasetSource::Circles {
            n_per_circle,
            r_outer,
            r_inner,
        } => gen_circles(*n_per_circle, *r_outer, *r_inner, &mut rng)?,
        DatasetSource::Moons { n_total } => gen_moons(*n_total, &mut rng)?,
    };
    Ok(ds)
}

fn run_algorithm(
    algorithm: &AlgorithmConfig,
    data: &comet_core::dataset::DataMatrix,
    seed: u64,
) -> Result<(Vec<i64>, usize)> {
    let n = data.n_rows();
    match algorithm {
        AlgorithmConfig::Comet(c) => {
            let params = c.resolve(n, seed);
            let res = comet::fit(data, &params)?;
            Ok((res.labels, res.n_clusters))
        }
        AlgorithmConfig::Kmeans { k, max_iter } => {
            let mut rng = rng_from_seed(seed);
            let (_, labels) = kmeans(data, *k, &mut rng, *max_iter)?;
            Ok(baseline_labels(labels))
        }
        AlgorithmConfig::MomKmeans {
            k,
            block_size,
            max_iter,
        } => {
            let mut rng = rng_from_seed(seed);
            let b = block_size.unwrap_or_else(|| default_block_size(n));
            let (_, labels) = mom_kmeans(data, *k, b, &mut rng, *max_iter)?;
            Ok(baseline_labels(labels))
        }
    }
}

/// Baselines report the number of clusters that actually received points.
fn baseline_labels(labels: Vec<usize>) -> (Vec<i64>, usize) {
    let mut distinct: Vec<usize> = labels.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let k_star = distinct.len();
    (labels.into_iter().map(|l| l as i64).collect(), k_star)
}

/// Run the full sweep: for each noise level and restart, contaminate the
/// base dataset with a child seed, run the algorithm with another child
/// seed, and score against the original rows only. Deterministic given the
/// config (wall times excepted).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let seed = cfg
        .seed
        .context("experiment seed is required (config [experiment] seed or --seed)")?;
    let base = load_base_dataset(cfg, seed)?;
    let resolved_block = resolved_block_size(cfg, &base);
    validate_algorithm(cfg, &base)?;

    let mut runs = Vec::with_capacity(cfg.noise_levels.len() * cfg.restarts);
    for &p in &cfg.noise_levels {
        for restart in 0..cfg.restarts {
            let mut noise_rng = rng_from_seed(derive_seed(
                seed,
                &[SEED_TAG_NOISE, p.to_bits(), restart as u64],
            ));
            let contaminated = inject_noise(&base, p, &mut noise_rng);
            let algo_seed = derive_seed(seed, &[SEED_TAG_ALGO, p.to_bits(), restart as u64]);

            let started = Instant::now();
            let (labels, k_star) = run_algorithm(&cfg.algorithm, &contaminated.data, algo_seed)?;
            let wall_secs = started.elapsed().as_secs_f64();

            let eval = evaluate_on_originals(&contaminated, &labels, k_star)?;
            runs.push(RunRecord {
                algorithm: cfg.algorithm.name().to_string(),
                noise_percent: p,
                restart,
                ari: eval.ari,
                ami: eval.ami,
                k_star: eval.k_star,
                wall_secs,
            });
        }
    }

    let rows = aggregate(cfg, &runs);
    Ok(ExperimentOutput {
        rows,
        runs,
        provenance: cfg.echo_lines(resolved_block),
    })
}

fn resolved_block_size(cfg: &ExperimentConfig, base: &LabeledDataset) -> Option<usize> {
    // The contaminated size varies per level; report the resolution at the
    // largest sweep size so the metadata is concrete.
    let max_p = cfg.noise_levels.iter().cloned().fold(0.0, f64::max);
    let n_max = base.n_points() + (base.n_points() as f64 * max_p / 100.0).floor() as usize;
    match &cfg.algorithm {
        AlgorithmConfig::Comet(c) if c.block_size.is_none() => Some(default_block_size(n_max)),
        AlgorithmConfig::MomKmeans {
            block_size: None, ..
        } => Some(default_block_size(n_max)),
        _ => None,
    }
}

fn validate_algorithm(cfg: &ExperimentConfig, base: &LabeledDataset) -> Result<()> {
    let n = base.n_points();
    match &cfg.algorithm {
        AlgorithmConfig::Comet(c) => {
            // Validate against the smallest dataset in the sweep (no noise).
            c.resolve(n, 0).validate(n)?;
        }
        AlgorithmConfig::Kmeans { k, .. } | AlgorithmConfig::MomKmeans { k, .. } => {
            if *k == 0 || *k > n {
                bail!("k must be in 1..={n}, got {k}");
            }
        }
    }
    Ok(())
}

fn aggregate(cfg: &ExperimentConfig, runs: &[RunRecord]) -> Vec<ResultRow> {
    let mut rows = Vec::with_capacity(cfg.noise_levels.len());
    for &p in &cfg.noise_levels {
        let cell: Vec<&RunRecord> = runs.iter().filter(|r| r.noise_percent == p).collect();
        let (mut ari, mut ami, mut kstar) = (Welford::new(), Welford::new(), Welford::new());
        let mut wall = 0.0;
        for r in &cell {
            ari.push(r.ari);
            ami.push(r.ami);
            kstar.push(r.k_star as f64);
            wall += r.wall_secs;
        }
        rows.push(ResultRow {
            algorithm: cfg.algorithm.name().to_string(),
            noise_percent: p,
            restarts: cell.len(),
            ari_mean: ari.mean(),
            ari_std: ari.std(),
            ami_mean: ami.mean(),
            ami_std: ami.std(),
            kstar_mean: kstar.mean(),
            kstar_std: kstar.std(),
            wall_secs_total: wall,
        });
    }
    rows.sort_by(|a, b| {
        (a.algorithm.as_str(), a.noise_percent)
            .partial_cmp(&(b.algorithm.as_str(), b.noise_percent))
            .expect("finite noise levels")
    });
    rows
}

/// Online mean and population standard deviation.
#[derive(Debug, Clone, Default)]
pub struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, value: f64) {
        self.n += 1;
        let delta = value - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (value - self.mean);
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Population standard deviation (zero for a single observation).
    pub fn std(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.m2 / self.n as f64).sqrt()
        }
    }
}

/// Significance of the per-level score differences between two experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub noise_percent: f64,
    /// One-sided p-value that config A's ARI sample is larger.
    pub ari_p: f64,
    pub ami_p: f64,
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub algorithm_a: String,
    pub algorithm_b: String,
    pub alpha: f64,
    pub rows: Vec<CompareRow>,
}

impl CompareRow {
    pub fn ari_significant(&self, alpha: f64) -> bool {
        self.ari_p <= alpha
    }

    pub fn ami_significant(&self, alpha: f64) -> bool {
        self.ami_p <= alpha
    }
}

/// Run both configs and test, per shared noise level, whether A's ARI and
/// AMI samples are significantly larger than B's (Monte Carlo rank-sum).
///
/// The configs must agree on the dataset and the restart count; the levels
/// compared are the intersection, which must be nonempty.
pub fn compare(
    cfg_a: &ExperimentConfig,
    cfg_b: &ExperimentConfig,
    n_mc: usize,
) -> Result<CompareReport> {
    if cfg_a.dataset != cfg_b.dataset {
        bail!(
            "configs must share the dataset: {} vs {}",
            cfg_a.dataset.describe(),
            cfg_b.dataset.describe()
        );
    }
    if cfg_a.restarts != cfg_b.restarts {
        bail!(
            "configs must share the restart count: {} vs {}",
            cfg_a.restarts,
            cfg_b.restarts
        );
    }
    let shared: Vec<f64> = cfg_a
        .noise_levels
        .iter()
        .filter(|p| cfg_b.noise_levels.contains(p))
        .copied()
        .collect();
    if shared.is_empty() {
        bail!(
            "configs share no noise levels: {:?} vs {:?}",
            cfg_a.noise_levels,
            cfg_b.noise_levels
        );
    }

    let out_a = run_experiment(cfg_a)?;
    let out_b = run_experiment(cfg_b)?;
    let seed_a = cfg_a.seed.expect("checked by run_experiment");
    let seed_b = cfg_b.seed.expect("checked by run_experiment");
    let master = derive_seed(seed_a, &[SEED_TAG_COMPARE, seed_b]);

    let mut rows = Vec::with_capacity(shared.len());
    for &p in &shared {
        let pick = |runs: &[RunRecord], f: fn(&RunRecord) -> f64| -> Vec<f64> {
            runs.iter()
                .filter(|r| r.noise_percent == p)
                .map(f)
                .collect()
        };
        let mut rng_ari = rng_from_seed(derive_seed(master, &[p.to_bits(), 0]));
        let mut rng_ami = rng_from_seed(derive_seed(master, &[p.to_bits(), 1]));
        let ari_p = wilcoxon_rank_sum_mc(
            &pick(&out_a.runs, |r| r.ari),
            &pick(&out_b.runs, |r| r.ari),
            n_mc,
            &mut rng_ari,
        )?;
        let ami_p = wilcoxon_rank_sum_mc(
            &pick(&out_a.runs, |r| r.ami),
            &pick(&out_b.runs, |r| r.ami),
            n_mc,
            &mut rng_ami,
        )?;
        rows.push(CompareRow {
            noise_percent: p,
            ari_p,
            ami_p,
        });
    }
    Ok(CompareReport {
        algorithm_a: cfg_a.algorithm.name().to_string(),
        algorithm_b: cfg_b.algorithm.name().to_string(),
        alpha: 0.05,
        rows,
    })
}
