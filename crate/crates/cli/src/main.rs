//! Command-line harness for robust convex clustering experiments.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use comet_cli::config::{default_block_size, parse_centers, parse_f64_list, ExperimentConfig};
use comet_cli::experiment::{compare, run_experiment, SEED_TAG_NOISE};
use comet_cli::report;
use comet_core::baselines::{kmeans, mom_kmeans};
use comet_core::comet::{Hyperparams, Optimizer};
use comet_core::dataset::{
    gen_blobs, gen_circles, gen_moons, inject_noise, load_table, save_table, NOISE_LABEL,
};
use comet_core::metrics::evaluate_on_originals;
use comet_core::rng::{derive_seed, rng_from_seed};

#[derive(Parser)]
#[command(
    name = "comet",
    about = "Robust convex clustering: synthesis, contamination sweeps, and significance reports",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset and write it as a labeled table.
    Synth(SynthArgs),
    /// Contaminate a dataset file with uniform box noise.
    Noise(NoiseArgs),
    /// Run one clustering pass on a file and print the labels.
    Cluster(ClusterArgs),
    /// Run a full noise sweep from a config file and write result tables.
    Bench(BenchArgs),
    /// Run two configs and test per-level score differences for significance.
    Compare(CompareArgs),
    /// Extract per-algorithm plot series from a results file.
    Plotdata(PlotdataArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Generator {
    Blobs,
    Circles,
    Moons,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    generator: Generator,
    /// Points per blob (blobs generator).
    #[arg(long, default_value_t = 500)]
    n_per_cluster: usize,
    /// Blob centers: points split by ';', coordinates by ',' .
    #[arg(long, default_value = "0,0 ; 10,0 ; 0,10")]
    centers: String,
    /// Points per circle (circles generator).
    #[arg(long, default_value_t = 350)]
    n_per_circle: usize,
    #[arg(long, default_value_t = 1.0)]
    r_outer: f64,
    #[arg(long, default_value_t = 0.25)]
    r_inner: f64,
    /// Total points (moons generator).
    #[arg(long, default_value_t = 1500)]
    n_total: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct NoiseArgs {
    #[arg(long)]
    input: PathBuf,
    /// 0-based label column of the input file.
    #[arg(long)]
    label_column: Option<usize>,
    /// Contamination level p: floor(n*p/100) points are appended.
    #[arg(long)]
    percent: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algorithm {
    Comet,
    Kmeans,
    MomKmeans,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    input: PathBuf,
    /// 0-based label column; enables scoring against the file's labels.
    #[arg(long)]
    label_column: Option<usize>,
    #[arg(long, value_enum, default_value = "comet")]
    algorithm: Algorithm,
    #[arg(long)]
    seed: u64,

    // Optimizer knobs (comet).
    #[arg(long, default_value_t = 1000)]
    iterations: usize,
    #[arg(long, default_value_t = 10)]
    k_neighbors: usize,
    #[arg(long, default_value_t = 0.5)]
    phi: f64,
    #[arg(long, default_value_t = 5000.0)]
    gamma: f64,
    /// Clip level, in squared-distance units.
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long, default_value_t = 0.5)]
    eta1: f64,
    /// Median-of-means block size; default max(1, n/11).
    #[arg(long)]
    block_size: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,

    // Baseline knobs.
    /// Cluster count for kmeans / mom-kmeans.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 300)]
    max_iter: usize,

    /// Write a per-iteration trace (iteration, median loss, cost,
    /// active edges) to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Dump the k-NN edge list as "i j w" lines to this file.
    #[arg(long)]
    dump_graph: Option<PathBuf>,
    /// Print only the summary, not the per-point labels.
    #[arg(long)]
    summary_only: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Experiment config file.
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config's seed.
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
    /// Override the config's restart count.
    #[arg(long)]
    restarts: Option<usize>,
    /// Override the config's noise levels, e.g. "0,5,10".
    #[arg(long)]
    noise_levels: Option<String>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    config_a: PathBuf,
    #[arg(long)]
    config_b: PathBuf,
    /// Monte Carlo permutations per test.
    #[arg(long, default_value_t = 10_000)]
    n_mc: usize,
    /// Also write compare.tsv here.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct PlotdataArgs {
    /// A results.tsv written by `bench`.
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Metric to extract: ari or ami.
    #[arg(long, default_value = "ari")]
    metric: String,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Synth(args) => synth(args),
        Command::Noise(args) => noise(args),
        Command::Cluster(args) => cluster(args),
        Command::Bench(args) => bench(args),
        Command::Compare(args) => run_compare(args),
        Command::Plotdata(args) => plotdata(args),
    }
}

fn synth(args: SynthArgs) -> Result<()> {
    let mut rng = rng_from_seed(args.seed);
    let ds = match args.generator {
        Generator::Blobs => {
            gen_blobs(args.n_per_cluster, &parse_centers(&args.centers)?, &mut rng)?
        }
        Generator::Circles => gen_circles(args.n_per_circle, args.r_outer, args.r_inner, &mut rng)?,
        Generator::Moons => gen_moons(args.n_total, &mut rng)?,
    };
    save_table(&ds, &args.output)?;
    println!(
        "wrote {} points ({} columns + label) to {}",
        ds.n_points(),
        ds.data.n_cols(),
        args.output.display()
    );
    Ok(())
}

fn noise(args: NoiseArgs) -> Result<()> {
    if !(args.percent >= 0.0 && args.percent.is_finite()) {
        bail!("--percent must be finite and non-negative");
    }
    let ds = load_table(&args.input, args.label_column)?;
    let mut rng = rng_from_seed(derive_seed(
        args.seed,
        &[SEED_TAG_NOISE, args.percent.to_bits(), 0],
    ));
    let noisy = inject_noise(&ds, args.percent, &mut rng);
    save_table(&noisy, &args.output)?;
    println!(
        "appended {} noise rows to {} originals, wrote {}",
        noisy.n_points() - ds.n_points(),
        ds.n_points(),
        args.output.display()
    );
    Ok(())
}

fn cluster(args: ClusterArgs) -> Result<()> {
    let ds = load_table(&args.input, args.label_column)?;
    let n = ds.n_points();

    let (labels, n_clusters) = match args.algorithm {
        Algorithm::Comet => {
            let params = Hyperparams {
                n_iters: args.iterations,
                k_neighbors: args.k_neighbors,
                phi: args.phi,
                gamma: args.gamma,
                mu: args.mu,
                eta1: args.eta1,
                block_size: args.block_size.unwrap_or_else(|| default_block_size(n)),
                alpha: args.alpha,
                seed: args.seed,
                ..Hyperparams::new(args.seed)
            };
            let mut opt = Optimizer::new(&ds.data, params.clone())?;
            if let Some(path) = &args.dump_graph {
                let mut file = fs::File::create(path)?;
                opt.graph().write_edge_list(&mut file)?;
                eprintln!("edge list written to {}", path.display());
            }
            if let Some(path) = &args.trace {
                let mut trace = Vec::with_capacity(params.n_iters);
                opt.run_traced(params.n_iters, &mut trace);
                report::write_trace(path, &trace)?;
                eprintln!("trace written to {}", path.display());
            } else {
                opt.run(params.n_iters);
            }
            let res = opt.finish();
            (res.labels, res.n_clusters)
        }
        Algorithm::Kmeans | Algorithm::MomKmeans => {
            let k = args
                .k
                .context("--k is required for the k-means baselines")?;
            let mut rng = rng_from_seed(args.seed);
            let raw = match args.algorithm {
                Algorithm::Kmeans => kmeans(&ds.data, k, &mut rng, args.max_iter)?.1,
                _ => {
                    let b = args.block_size.unwrap_or_else(|| default_block_size(n));
                    mom_kmeans(&ds.data, k, b, &mut rng, args.max_iter)?.1
                }
            };
            let labels: Vec<i64> = raw.iter().map(|&l| l as i64).collect();
            let mut distinct = raw;
            distinct.sort_unstable();
            distinct.dedup();
            (labels, distinct.len())
        }
    };

    println!("points: {n}");
    println!("clusters: {n_clusters}");
    let flagged = labels.iter().filter(|&&l| l == NOISE_LABEL).count();
    println!("noise-labeled points: {flagged}");
    let mut sizes: BTreeMap<i64, usize> = BTreeMap::new();
    for &l in &labels {
        *sizes.entry(l).or_default() += 1;
    }
    for (label, size) in &sizes {
        println!("  label {label}: {size} points");
    }
    if args.label_column.is_some() {
        let eval = evaluate_on_originals(&ds, &labels, n_clusters)?;
        println!(
            "scores on original rows: ari {:.4}, ami {:.4}, k* {}",
            eval.ari, eval.ami, eval.k_star
        );
    }
    if !args.summary_only {
        for l in &labels {
            println!("{l}");
        }
    }
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::from_file(&args.config)?;
    cfg.seed = Some(args.seed);
    if let Some(r) = args.restarts {
        if r == 0 {
            bail!("--restarts must be at least 1");
        }
        cfg.restarts = r;
    }
    if let Some(levels) = &args.noise_levels {
        cfg.noise_levels = parse_f64_list(levels)?;
        if cfg.noise_levels.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            bail!("noise levels must be finite and non-negative");
        }
    }

    let out = run_experiment(&cfg)?;
    fs::create_dir_all(&args.out_dir)?;
    let results = report::write_results(&args.out_dir, &out)?;
    report::write_runs(&args.out_dir, &out)?;
    report::write_timing(&args.out_dir, &out)?;
    print!("{}", report::summarize_rows(&out.rows));
    println!("results written to {}", results.display());
    Ok(())
}

fn run_compare(args: CompareArgs) -> Result<()> {
    let cfg_a = ExperimentConfig::from_file(&args.config_a)?;
    let cfg_b = ExperimentConfig::from_file(&args.config_b)?;
    for (name, cfg) in [("A", &cfg_a), ("B", &cfg_b)] {
        if cfg.seed.is_none() {
            bail!("config {name} must set [experiment] seed for compare");
        }
    }
    let report_data = compare(&cfg_a, &cfg_b, args.n_mc)?;

    println!(
        "one-sided rank-sum: {} > {} (alpha = {})",
        report_data.algorithm_a, report_data.algorithm_b, report_data.alpha
    );
    println!("noise%   ari_p        ami_p");
    for row in &report_data.rows {
        println!(
            "{:<8} {:<12.6} {}  {:<12.6} {}",
            row.noise_percent,
            row.ari_p,
            if row.ari_significant(report_data.alpha) {
                "\u{2020}"
            } else {
                " "
            },
            row.ami_p,
            if row.ami_significant(report_data.alpha) {
                "\u{2020}"
            } else {
                " "
            },
        );
    }

    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir)?;
        let mut provenance = vec![format!("config_a = {}", args.config_a.display())];
        provenance.extend(cfg_a.echo_lines(None).iter().map(|l| format!("a.{l}")));
        provenance.push(format!("config_b = {}", args.config_b.display()));
        provenance.extend(cfg_b.echo_lines(None).iter().map(|l| format!("b.{l}")));
        provenance.push(format!("n_mc = {}", args.n_mc));
        let path = report::write_compare(dir, &report_data, &provenance)?;
        println!("comparison written to {}", path.display());
    }
    Ok(())
}

fn plotdata(args: PlotdataArgs) -> Result<()> {
    let rows = report::read_results(&args.results)?;
    fs::create_dir_all(&args.out_dir)?;
    let provenance = vec![format!("source = {}", args.results.display())];
    let paths = report::write_plot_data(&args.out_dir, &rows, &args.metric, &provenance)?;
    for p in &paths {
        println!("wrote {}", p.display());
    }
    Ok(())
}
