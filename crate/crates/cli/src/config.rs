//! Experiment configuration: a flat key-value text format with one section
//! per concern.
//!
//! ```text
//! [experiment]
//! algorithm = comet            # comet | kmeans | mom_kmeans
//! noise_levels = 0,5,10,15,20
//! restarts = 25
//! seed = 7
//!
//! [dataset]
//! source = blobs               # file | blobs | circles | moons
//! n_per_cluster = 500
//! centers = 0,0 ; 10,0 ; 0,10
//!
//! [comet]
//! iterations = 600
//! k_neighbors = 10
//! gamma = 5000
//! mu = 1.0
//! eta1 = 0.5
//! ```
//!
//! Lines starting with `#` and blank lines are ignored; inline `#` comments
//! are stripped. Unknown keys are rejected so typos fail fast.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use comet_core::comet::Hyperparams;

/// Where the base (uncontaminated) dataset comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    File {
        path: PathBuf,
        label_column: Option<usize>,
    },
    Blobs {
        n_per_cluster: usize,
        centers: Vec<Vec<f64>>,
    },
    Circles {
        n_per_circle: usize,
        r_outer: f64,
        r_inner: f64,
    },
    Moons {
        n_total: usize,
    },
}

impl DatasetSource {
    /// One-line description used in output headers.
    pub fn describe(&self) -> String {
        match self {
            DatasetSource::File { path, label_column } => match label_column {
                Some(c) => format!("file path={} label_column={c}", path.display()),
                None => format!("file path={}", path.display()),
            },
            DatasetSource::Blobs {
                n_per_cluster,
                centers,
            } => {
                let pts: Vec<String> = centers
                    .iter()
                    .map(|c| c.iter().map(f64::to_string).collect::<Vec<_>>().join(","))
                    .collect();
                format!(
                    "blobs n_per_cluster={n_per_cluster} centers={}",
                    pts.join(";")
                )
            }
            DatasetSource::Circles {
                n_per_circle,
                r_outer,
                r_inner,
            } => {
                format!("circles n_per_circle={n_per_circle} r_outer={r_outer} r_inner={r_inner}")
            }
            DatasetSource::Moons { n_total } => format!("moons n_total={n_total}"),
        }
    }
}

/// Optimizer parameters as configured; `block_size = None` resolves to
/// `max(1, n / 11)` once the dataset size is known.
#[derive(Debug, Clone, PartialEq)]
pub struct CometConfig {
    pub iterations: usize,
    pub k_neighbors: usize,
    pub phi: f64,
    pub gamma: f64,
    pub mu: f64,
    pub eta1: f64,
    pub block_size: Option<usize>,
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_adam: f64,
    pub bias_correction: bool,
    pub force_odd_blocks: bool,
}

impl Default for CometConfig {
    fn default() -> Self {
        let h = Hyperparams::new(0);
        Self {
            iterations: h.n_iters,
            k_neighbors: h.k_neighbors,
            phi: h.phi,
            gamma: h.gamma,
            mu: h.mu,
            eta1: h.eta1,
            block_size: None,
            alpha: h.alpha,
            beta1: h.beta1,
            beta2: h.beta2,
            eps_adam: h.eps_adam,
            bias_correction: h.bias_correction,
            force_odd_blocks: h.force_odd_blocks,
        }
    }
}

impl CometConfig {
    /// Concrete hyperparameters for a dataset of `n` points.
    pub fn resolve(&self, n: usize, seed: u64) -> Hyperparams {
        Hyperparams {
            n_iters: self.iterations,
            k_neighbors: self.k_neighbors,
            phi: self.phi,
            gamma: self.gamma,
            mu: self.mu,
            eta1: self.eta1,
            block_size: self.block_size.unwrap_or_else(|| default_block_size(n)),
            alpha: self.alpha,
            beta1: self.beta1,
            beta2: self.beta2,
            eps_adam: self.eps_adam,
            seed,
            bias_correction: self.bias_correction,
            force_odd_blocks: self.force_odd_blocks,
        }
    }
}

/// Default median-of-means block size: roughly eleven blocks.
pub fn default_block_size(n: usize) -> usize {
    (n / 11).max(1)
}

#[derive(Debug, Clone, PartialEq)]
pub enum AlgorithmConfig {
    Comet(CometConfig),
    Kmeans {
        k: usize,
        max_iter: usize,
    },
    MomKmeans {
        k: usize,
        block_size: Option<usize>,
        max_iter: usize,
    },
}

impl AlgorithmConfig {
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmConfig::Comet(_) => "comet",
            AlgorithmConfig::Kmeans { .. } => "kmeans",
            AlgorithmConfig::MomKmeans { .. } => "mom_kmeans",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub algorithm: AlgorithmConfig,
    pub noise_levels: Vec<f64>,
    pub restarts: usize,
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let sections = parse_sections(text)?;
        for name in sections.keys() {
            if !["experiment", "dataset", "comet", "kmeans", "mom_kmeans"].contains(&name.as_str())
            {
                bail!("unknown section [{name}]");
            }
        }

        let exp = sections
            .get("experiment")
            .context("missing [experiment] section")?;
        let algorithm_name = exp.require("algorithm")?;
        let noise_levels = match exp.get("noise_levels") {
            Some(v) => parse_f64_list(v).context("noise_levels")?,
            None => vec![0.0],
        };
        if noise_levels.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            bail!("noise levels must be finite and non-negative: {noise_levels:?}");
        }
        let restarts: usize = exp.parse_or("restarts", 1)?;
        if restarts == 0 {
            bail!("restarts must be at least 1");
        }
        let seed: Option<u64> = exp.parse_opt("seed")?;

        let ds = sections
            .get("dataset")
            .context("missing [dataset] section")?;
        let dataset = parse_dataset(ds)?;

        let algorithm = match algorithm_name.as_str() {
            "comet" => AlgorithmConfig::Comet(parse_comet(sections.get("comet"))?),
            "kmeans" => {
                let sec = sections.get("kmeans").context("missing [kmeans] section")?;
                sec.check_known(&["k", "max_iter"])?;
                AlgorithmConfig::Kmeans {
                    k: sec.parse_require("k")?,
                    max_iter: sec.parse_or("max_iter", 300)?,
                }
            }
            "mom_kmeans" => {
                let sec = sections
                    .get("mom_kmeans")
                    .context("missing [mom_kmeans] section")?;
                sec.check_known(&["k", "block_size", "max_iter"])?;
                AlgorithmConfig::MomKmeans {
                    k: sec.parse_require("k")?,
                    block_size: sec.parse_opt("block_size")?,
                    max_iter: sec.parse_or("max_iter", 300)?,
                }
            }
            other => bail!("unknown algorithm {other:?} (expected comet, kmeans or mom_kmeans)"),
        };

        Ok(Self {
            dataset,
            algorithm,
            noise_levels,
            restarts,
            seed,
        })
    }

    /// Deterministic `key = value` lines echoed into every output file.
    pub fn echo_lines(&self, resolved_block_size: Option<usize>) -> Vec<String> {
        let mut lines = vec![
            format!("algorithm = {}", self.algorithm.name()),
            format!("dataset = {}", self.dataset.describe()),
            format!(
                "noise_levels = {}",
                self.noise_levels
                    .iter()
                    .map(f64::to_string)
                    .collect::<Vec<_>>()
                    .join(",")
            ),
            format!("restarts = {}", self.restarts),
            format!(
                "seed = {}",
                self.seed.map_or_else(|| "unset".into(), |s| s.to_string())
            ),
        ];
        let block = |configured: Option<usize>| match (configured, resolved_block_size) {
            (Some(b), _) => b.to_string(),
            (None, Some(b)) => format!("{b} (auto)"),
            (None, None) => "auto".into(),
        };
        match &self.algorithm {
            AlgorithmConfig::Comet(c) => {
                lines.push(format!("comet.iterations = {}", c.iterations));
                lines.push(format!("comet.k_neighbors = {}", c.k_neighbors));
                lines.push(format!("comet.phi = {}", c.phi));
                lines.push(format!("comet.gamma = {}", c.gamma));
                lines.push(format!("comet.mu = {}", c.mu));
                lines.push(format!("comet.eta1 = {}", c.eta1));
                lines.push(format!("comet.block_size = {}", block(c.block_size)));
                lines.push(format!("comet.alpha = {}", c.alpha));
                lines.push(format!("comet.beta1 = {}", c.beta1));
                lines.push(format!("comet.beta2 = {}", c.beta2));
                lines.push(format!("comet.eps_adam = {}", c.eps_adam));
                lines.push(format!("comet.bias_correction = {}", c.bias_correction));
                lines.push(format!("comet.force_odd_blocks = {}", c.force_odd_blocks));
            }
            AlgorithmConfig::Kmeans { k, max_iter } => {
                lines.push(format!("kmeans.k = {k}"));
                lines.push(format!("kmeans.max_iter = {max_iter}"));
            }
            AlgorithmConfig::MomKmeans {
                k,
                block_size,
                max_iter,
            } => {
                lines.push(format!("mom_kmeans.k = {k}"));
                lines.push(format!("mom_kmeans.block_size = {}", block(*block_size)));
                lines.push(format!("mom_kmeans.max_iter = {max_iter}"));
            }
        }
        lines
    }
}

fn parse_comet(section: Option<&Section>) -> Result<CometConfig> {
    let mut c = CometConfig::default();
    let Some(sec) = section else {
        return Ok(c);
    };
    sec.check_known(&[
        "iterations",
        "k_neighbors",
        "phi",
        "gamma",
        "mu",
        "eta1",
        "block_size",
        "alpha",
        "beta1",
        "beta2",
        "eps_adam",
        "bias_correction",
        "force_odd_blocks",
    ])?;
    c.iterations = sec.parse_or("iterations", c.iterations)?;
    c.k_neighbors = sec.parse_or("k_neighbors", c.k_neighbors)?;
    c.phi = sec.parse_or("phi", c.phi)?;
    c.gamma = sec.parse_or("gamma", c.gamma)?;
    c.mu = sec.parse_or("mu", c.mu)?;
    c.eta1 = sec.parse_or("eta1", c.eta1)?;
    c.block_size = sec.parse_opt("block_size")?;
    c.alpha = sec.parse_or("alpha", c.alpha)?;
    c.beta1 = sec.parse_or("beta1", c.beta1)?;
    c.beta2 = sec.parse_or("beta2", c.beta2)?;
    c.eps_adam = sec.parse_or("eps_adam", c.eps_adam)?;
    c.bias_correction = sec.parse_or("bias_correction", c.bias_correction)?;
    c.force_odd_blocks = sec.parse_or("force_odd_blocks", c.force_odd_blocks)?;
    Ok(c)
}

fn parse_dataset(sec: &Section) -> Result<DatasetSource> {
    let source = sec.require("source")?;
    match source.as_str() {
        "file" => {
            sec.check_known(&["source", "path", "label_column"])?;
            Ok(DatasetSource::File {
                path: PathBuf::from(sec.require("path")?),
                label_column: sec.parse_opt("label_column")?,
            })
        }
        "blobs" => {
            sec.check_known(&["source", "n_per_cluster", "centers"])?;
            Ok(DatasetSource::Blobs {
                n_per_cluster: sec.parse_require("n_per_cluster")?,
                centers: parse_centers(&sec.require("centers")?)?,
            })
        }
        "circles" => {
            sec.check_known(&["source", "n_per_circle", "r_outer", "r_inner"])?;
            Ok(DatasetSource::Circles {
                n_per_circle: sec.parse_require("n_per_circle")?,
                r_outer: sec.parse_or("r_outer", 1.0)?,
                r_inner: sec.parse_or("r_inner", 0.25)?,
            })
        }
        "moons" => {
            sec.check_known(&["source", "n_total"])?;
            Ok(DatasetSource::Moons {
                n_total: sec.parse_require("n_total")?,
            })
        }
        other => bail!("unknown dataset source {other:?}"),
    }
}

/// Points separated by `;`, coordinates by `,`: `0,0 ; 10,0 ; 0,10`.
pub fn parse_centers(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut centers = Vec::new();
    for part in text.split(';') {
        let coords: Vec<f64> = part
            .split(',')
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .with_context(|| format!("bad coordinate {:?} in centers", c.trim()))
            })
            .collect::<Result<_>>()?;
        if coords.is_empty() {
            bail!("empty center in {text:?}");
        }
        centers.push(coords);
    }
    if centers.is_empty() {
        bail!("centers list is empty");
    }
    Ok(centers)
}

pub fn parse_f64_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .with_context(|| format!("bad number {:?}", p.trim()))
        })
        .collect()
}

#[derive(Debug, Default)]
struct Section {
    entries: BTreeMap<String, String>,
}

impl Section {
    fn get(&self, key: &str) -> Option<&String> {
        self.entries.get(key)
    }

    fn require(&self, key: &str) -> Result<String> {
        self.get(key)
            .cloned()
            .with_context(|| format!("missing key {key:?}"))
    }

    fn parse_require<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.require(key)?;
        raw.parse()
            .map_err(|_| anyhow::anyhow!("key {key:?}: cannot parse {raw:?}"))
    }

    fn parse_opt<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| anyhow::anyhow!("key {key:?}: cannot parse {raw:?}")),
        }
    }

    fn parse_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.parse_opt(key)?.unwrap_or(default))
    }

    fn check_known(&self, known: &[&str]) -> Result<()> {
        for key in self.entries.keys() {
            if !known.contains(&key.as_str()) {
                bail!("unknown key {key:?} (expected one of {known:?})");
            }
        }
        Ok(())
    }
}

fn parse_sections(text: &str) -> Result<BTreeMap<String, Section>> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = Some(name.trim().to_string());
            sections.entry(name.trim().to_string()).or_default();
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected `key = value`, got {raw:?}", no + 1);
        };
        let Some(section) = &current else {
            bail!("line {}: key outside any [section]", no + 1);
        };
        let prev = sections
            .get_mut(section)
            .expect("section entry exists")
            .entries
            .insert(key.trim().to_string(), value.trim().to_string());
        if prev.is_some() {
            bail!(
                "line {}: duplicate key {:?} in [{section}]",
                no + 1,
                key.trim()
            );
        }
    }
    Ok(sections)
}
