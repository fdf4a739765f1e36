//! Acceptance suite: every release gate runs here, one line per criterion.
//!
//! Run with:
//!
//! ```text
//! cargo test -p comet-cli --test acceptance -- --nocapture
//! ```
//!
//! Criteria execute sequentially inside a single test so the timing
//! measurement is not perturbed by sibling tests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use comet_cli::config::{AlgorithmConfig, CometConfig, DatasetSource, ExperimentConfig};
use comet_cli::experiment::{compare, run_experiment};
use comet_core::comet::{cost, gradient, Hyperparams, Optimizer};
use comet_core::dataset::DataMatrix;
use comet_core::graph::knn_weights;
use comet_core::metrics::{
    ari, expected_mutual_information, wilcoxon_rank_sum_mc, ContingencyTable,
};
use comet_core::mom::{median_block, random_partition};
use comet_core::rng::{derive_seed, rng_from_seed, Rng};
use rand::Rng as _;

type Outcome = Result<String, String>;

struct Gate {
    lines: Vec<(String, bool)>,
}

impl Gate {
    fn new() -> Self {
        Self { lines: Vec::new() }
    }

    fn record(&mut self, number: usize, name: &str, outcome: Outcome) {
        let (ok, detail) = match outcome {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        let line = format!(
            "criterion {number} ({name}): {} - {detail}",
            if ok { "PASS" } else { "FAIL" }
        );
        println!("{line}");
        self.lines.push((line, ok));
    }

    fn skip(&mut self, number: usize, name: &str, reason: &str) {
        let line = format!("criterion {number} ({name}): SKIP - {reason}");
        println!("{line}");
        self.lines.push((line, true));
    }

    fn finish(self) {
        let failed: Vec<&str> = self
            .lines
            .iter()
            .filter(|(_, ok)| !ok)
            .map(|(l, _)| l.as_str())
            .collect();
        assert!(failed.is_empty(), "failed criteria:\n{}", failed.join("\n"));
    }
}

#[test]
fn acceptance() {
    let mut gate = Gate::new();
    gate.record(1, "gradient-cost consistency", gradient_cost_consistency());
    gate.record(
        2,
        "median-block oracle equivalence",
        mom_oracle_equivalence(),
    );
    gate.record(3, "metric oracles", metric_oracles());
    gate.record(4, "synthetic robustness sweep", synthetic_robustness());
    match published_score_reproduction() {
        Some(outcome) => gate.record(5, "published-score reproduction", outcome),
        None => gate.skip(
            5,
            "published-score reproduction",
            "newthyroid/wisconsin tables not found locally (set COMET_DATA_DIR or add ./data)",
        ),
    }
    gate.record(6, "per-iteration complexity scaling", complexity_scaling());
    gate.record(7, "robust vs non-robust ordering", robust_vs_nonrobust());
    gate.record(8, "bench determinism", bench_determinism());
    gate.record(9, "error-decay smoke test", error_decay());
    gate.finish();
}

// criterion 1: central finite differences of the objective must match the
// analytic gradient away from the clip boundary, max relative error 1e-4,
// within 10 seconds.
fn gradient_cost_consistency() -> Outcome {
    let started = Instant::now();
    let mut rng = rng_from_seed(0xC0517);
    let mut worst: f64 = 0.0;

    for _ in 0..100 {
        let n = rng.gen_range(2..=50usize);
        let d = rng.gen_range(1..=5usize);
        let x_rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect())
            .collect();
        let x = DataMatrix::from_rows(&x_rows).unwrap();
        let u_rows: Vec<Vec<f64>> = x_rows
            .iter()
            .map(|r| r.iter().map(|v| v + rng.gen::<f64>() * 1.6 - 0.8).collect())
            .collect();
        let u = DataMatrix::from_rows(&u_rows).unwrap();

        let k = rng.gen_range(1..=(n - 1).min(6));
        let phi = rng.gen::<f64>() * 1.5;
        let gamma = 0.2 + rng.gen::<f64>() * 3.8;
        let graph = knn_weights(&x, k, phi).unwrap();

        // Keep every edge's squared distance at least 1e-3 away from the
        // clip level so the instance is smooth.
        let mut mu = 0.0;
        let mut margin_ok = false;
        for _ in 0..200 {
            mu = 0.05 + rng.gen::<f64>() * 4.0;
            margin_ok = graph.edges().iter().all(|&(i, j, _)| {
                let dsq: f64 = u
                    .row(i)
                    .iter()
                    .zip(u.row(j))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                (dsq - mu).abs() >= 1e-3
            });
            if margin_ok {
                break;
            }
        }
        if !margin_ok {
            return Err("could not place the clip level away from every edge".into());
        }

        let block_size = rng.gen_range(1..=n);
        let binning = random_partition(n, block_size, &mut rng).unwrap();
        let selected = median_block(&x, &u, &binning);
        let block = &binning.blocks()[selected.index];

        let grad = gradient(&u, &x, block, &graph, gamma, mu, block_size);
        let step = 1e-5;
        for idx in 0..n * d {
            let mut plus = u.values().to_vec();
            let mut minus = plus.clone();
            plus[idx] += step;
            minus[idx] -= step;
            let cp = cost(
                &DataMatrix::new(n, d, plus).unwrap(),
                &x,
                block,
                &graph,
                gamma,
                mu,
            );
            let cm = cost(
                &DataMatrix::new(n, d, minus).unwrap(),
                &x,
                block,
                &graph,
                gamma,
                mu,
            );
            let fd = (cp - cm) / (2.0 * step);
            let err = (fd - grad[idx]).abs() / grad[idx].abs().max(1.0);
            worst = worst.max(err);
        }
    }

    let elapsed = started.elapsed().as_secs_f64();
    let detail = format!("max relative error {worst:.2e} over 100 instances in {elapsed:.2}s");
    if worst <= 1e-4 && elapsed < 10.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// criterion 2: the selected block must equal the sort-oracle lower median
// exactly, for every block count 1..=9 over 1000 random loss vectors each.
fn mom_oracle_equivalence() -> Outcome {
    let mut rng = rng_from_seed(0x303);
    let mut checked = 0usize;
    for l in 1..=9usize {
        for _ in 0..1000 {
            // About half the vectors draw from a coarse grid to force ties.
            let losses: Vec<f64> = (0..l)
                .map(|_| {
                    if rng.gen::<bool>() {
                        rng.gen_range(0..5) as f64 * 0.5
                    } else {
                        rng.gen::<f64>() * 3.0
                    }
                })
                .collect();

            // Singleton blocks with x = sqrt(2 * loss) realize the target
            // losses exactly through the fidelity formula.
            let x_rows: Vec<Vec<f64>> = losses.iter().map(|&v| vec![(2.0 * v).sqrt()]).collect();
            let x = DataMatrix::from_rows(&x_rows).unwrap();
            let u = DataMatrix::new(l, 1, vec![0.0; l]).unwrap();
            let binning = random_partition(l, 1, &mut rng).unwrap();
            let actual_losses: Vec<f64> = binning
                .blocks()
                .iter()
                .map(|b| {
                    let i = b[0];
                    x.get(i, 0) * x.get(i, 0) / 2.0
                })
                .collect();

            let mut sorted = actual_losses.clone();
            sorted.sort_by(f64::total_cmp);
            let expected_loss = sorted[(l - 1) / 2];
            let expected_index = actual_losses
                .iter()
                .position(|&v| v == expected_loss)
                .unwrap();

            let got = median_block(&x, &u, &binning);
            if got.index != expected_index || got.loss != expected_loss {
                return Err(format!(
                    "l={l}: selected ({}, {}) but oracle says ({expected_index}, {expected_loss})",
                    got.index, got.loss
                ));
            }
            checked += 1;
        }
    }
    Ok(format!(
        "{checked} random binnings matched the sort oracle exactly"
    ))
}

// criterion 3: ARI against exhaustive pair counting (1e-12), expected MI
// against hypergeometric enumeration (1e-9), and the Monte Carlo rank-sum
// p-value within 3 standard errors of exact enumeration for pooled <= 10.
fn metric_oracles() -> Outcome {
    let mut rng = rng_from_seed(0xA51);

    let mut worst_ari: f64 = 0.0;
    for _ in 0..500 {
        let n = rng.gen_range(2..=12usize);
        let t: Vec<i64> = (0..n).map(|_| rng.gen_range(0..4)).collect();
        let p: Vec<i64> = (0..n).map(|_| rng.gen_range(0..4)).collect();
        let got = ari(&t, &p).unwrap();
        let want = ari_pair_oracle(&t, &p);
        worst_ari = worst_ari.max((got - want).abs());
    }
    if worst_ari > 1e-12 {
        return Err(format!(
            "ARI deviates from pair counting by {worst_ari:.2e}"
        ));
    }

    let mut worst_emi: f64 = 0.0;
    for _ in 0..300 {
        let n = rng.gen_range(2..=10usize);
        let t: Vec<i64> = (0..n).map(|_| rng.gen_range(0..3)).collect();
        let p: Vec<i64> = (0..n).map(|_| rng.gen_range(0..3)).collect();
        let table = ContingencyTable::from_labels(&t, &p).unwrap();
        let got = expected_mutual_information(&table);
        let want = emi_enumeration_oracle(&table);
        worst_emi = worst_emi.max((got - want).abs());
    }
    if worst_emi > 1e-9 {
        return Err(format!(
            "expected MI deviates from enumeration by {worst_emi:.2e}"
        ));
    }

    // Rank-sum calibration against exact permutation enumeration.
    let n_mc = 20_000usize;
    let mut cases: Vec<(Vec<f64>, Vec<f64>)> = vec![
        (vec![2.0], vec![1.0]), // exact p = 1/2
        (
            vec![6.0, 7.0, 8.0, 9.0, 10.0],
            vec![1.0, 2.0, 3.0, 4.0, 5.0],
        ), // exact p = 1/252
    ];
    for _ in 0..10 {
        let na = rng.gen_range(1..=5usize);
        let nb = rng.gen_range(1..=(10 - na).min(5)).max(1);
        let a: Vec<f64> = (0..na).map(|_| rng.gen_range(0..6) as f64 * 0.5).collect();
        let b: Vec<f64> = (0..nb).map(|_| rng.gen_range(0..6) as f64 * 0.5).collect();
        cases.push((a, b));
    }
    let mut worst_z = 0.0f64;
    for (a, b) in &cases {
        let exact = wilcoxon_exact_oracle(a, b);
        let mc = wilcoxon_rank_sum_mc(a, b, n_mc, &mut rng).unwrap();
        let se = (exact * (1.0 - exact) / n_mc as f64).sqrt();
        let tolerance = 3.0 * se + 2.0 / (n_mc + 1) as f64;
        let gap = (mc - exact).abs();
        worst_z = worst_z.max(if tolerance > 0.0 {
            gap / tolerance
        } else {
            0.0
        });
        if gap > tolerance {
            return Err(format!(
                "rank-sum p {mc:.5} vs exact {exact:.5} off by {gap:.2e} (> {tolerance:.2e}) for {a:?} vs {b:?}"
            ));
        }
    }
    Ok(format!(
        "ARI off by {worst_ari:.1e}, EMI off by {worst_emi:.1e}, rank-sum within {worst_z:.2} of the 3-SE budget"
    ))
}

fn ari_pair_oracle(truth: &[i64], pred: &[i64]) -> f64 {
    let n = truth.len();
    let (mut a, mut b, mut c, mut d) = (0f64, 0f64, 0f64, 0f64);
    for i in 0..n {
        for j in (i + 1)..n {
            match (truth[i] == truth[j], pred[i] == pred[j]) {
                (true, true) => a += 1.0,
                (true, false) => b += 1.0,
                (false, true) => c += 1.0,
                (false, false) => d += 1.0,
            }
        }
    }
    let num = 2.0 * (a * d - b * c);
    let den = (a + b) * (b + d) + (a + c) * (c + d);
    if den == 0.0 {
        1.0
    } else {
        num / den
    }
}

fn emi_enumeration_oracle(table: &ContingencyTable) -> f64 {
    fn binom(n: usize, k: usize) -> f64 {
        if k > n {
            return 0.0;
        }
        let mut acc = 1.0f64;
        for i in 0..k {
            acc = acc * (n - i) as f64 / (i + 1) as f64;
        }
        acc
    }
    let n = table.n();
    let mut emi = 0.0;
    for &a in table.row_marginals() {
        for &b in table.col_marginals() {
            for nij in 1..=a.min(b) {
                if a + b > n && nij < a + b - n {
                    continue;
                }
                let p = binom(b, nij) * binom(n - b, a - nij) / binom(n, a);
                emi += (nij as f64 / n as f64) * ((n * nij) as f64 / (a * b) as f64).ln() * p;
            }
        }
    }
    emi
}

/// Exact one-sided rank-sum exceedance probability by enumerating every
/// assignment of pooled positions to the first sample.
fn wilcoxon_exact_oracle(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let observed: f64 = ranks[..a.len()].iter().sum();

    let mut exceed = 0usize;
    let mut total = 0usize;
    let mut chosen = Vec::with_capacity(a.len());
    enumerate_subsets(&ranks, a.len(), 0, 0.0, &mut chosen, &mut |stat| {
        total += 1;
        if stat >= observed - 1e-12 {
            exceed += 1;
        }
    });
    exceed as f64 / total as f64
}

fn enumerate_subsets(
    ranks: &[f64],
    want: usize,
    from: usize,
    acc: f64,
    chosen: &mut Vec<usize>,
    visit: &mut impl FnMut(f64),
) {
    if chosen.len() == want {
        visit(acc);
        return;
    }
    for i in from..ranks.len() {
        chosen.push(i);
        enumerate_subsets(ranks, want, i + 1, acc + ranks[i], chosen, visit);
        chosen.pop();
    }
}

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
        let mid = (start + end + 1) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = mid;
        }
        start = end;
    }
    ranks
}

fn blob_dataset() -> DatasetSource {
    DatasetSource::Blobs {
        n_per_cluster: 500,
        centers: vec![vec![0.0, 0.0], vec![10.0, 0.0], vec![0.0, 10.0]],
    }
}

fn comet_blobs_params() -> CometConfig {
    CometConfig {
        iterations: 600,
        k_neighbors: 10,
        phi: 0.5,
        gamma: 5000.0,
        mu: 1.0,
        eta1: 0.25,
        block_size: None,
        ..CometConfig::default()
    }
}

// criterion 4: the contamination sweep on three well-separated blobs must
// report exactly 3 clusters and ARI >= 0.90 on original points at every
// level, within 2 minutes.
fn synthetic_robustness() -> Outcome {
    let started = Instant::now();
    let cfg = ExperimentConfig {
        dataset: blob_dataset(),
        algorithm: AlgorithmConfig::Comet(comet_blobs_params()),
        noise_levels: vec![0.0, 5.0, 10.0, 15.0, 20.0],
        restarts: 2,
        seed: Some(0),
    };
    let out = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed().as_secs_f64();

    let mut min_ari = f64::INFINITY;
    for run in &out.runs {
        min_ari = min_ari.min(run.ari);
        if run.k_star != 3 {
            return Err(format!(
                "k* = {} at noise {}% (restart {})",
                run.k_star, run.noise_percent, run.restart
            ));
        }
        if run.ari < 0.90 {
            return Err(format!(
                "ARI {} at noise {}% (restart {})",
                run.ari, run.noise_percent, run.restart
            ));
        }
    }
    let detail =
        format!("k* = 3 at all 5 levels x 2 restarts, min ARI {min_ari:.4}, {elapsed:.1}s");
    if elapsed < 120.0 {
        Ok(detail)
    } else {
        Err(format!("{detail} (over the 2 minute budget)"))
    }
}

// criterion 5: reproduce the published scores when the real tables are
// available on disk; otherwise the suite reports SKIP.
fn published_score_reproduction() -> Option<Outcome> {
    let dir = std::env::var("COMET_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|_| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data"));
    let newthyroid = dir.join("newthyroid.csv");
    let wisconsin = dir.join("wisconsin.csv");
    if !newthyroid.exists() && !wisconsin.exists() {
        return None;
    }

    let mut detail = String::new();
    let mut failed = false;

    if newthyroid.exists() {
        match dataset_score(&newthyroid, 10.0, 45, 60.0, 4.0) {
            Ok((ari_mean, ami_mean)) => {
                let ok = (ari_mean - 0.97).abs() <= 0.05 && (ami_mean - 0.90).abs() <= 0.05;
                failed |= !ok;
                let _ = write!(
                    detail,
                    "newthyroid@10%: ari {ari_mean:.3}, ami {ami_mean:.3}; "
                );
            }
            Err(e) => {
                failed = true;
                let _ = write!(detail, "newthyroid failed: {e}; ");
            }
        }
    } else {
        let _ = write!(detail, "newthyroid.csv absent; ");
    }

    if wisconsin.exists() {
        match dataset_score(&wisconsin, 0.0, 28, 8.0, 1.5) {
            Ok((ari_mean, _)) => {
                let ok = (ari_mean - 0.88).abs() <= 0.05;
                failed |= !ok;
                let _ = write!(detail, "wisconsin@0%: ari {ari_mean:.3}");
            }
            Err(e) => {
                failed = true;
                let _ = write!(detail, "wisconsin failed: {e}");
            }
        }
    } else {
        let _ = write!(detail, "wisconsin.csv absent");
    }

    Some(if failed { Err(detail) } else { Ok(detail) })
}

fn dataset_score(
    path: &Path,
    noise: f64,
    k_neighbors: usize,
    mu: f64,
    eta1: f64,
) -> Result<(f64, f64), String> {
    let probe = comet_core::dataset::load_table(path, None).map_err(|e| e.to_string())?;
    let label_column = probe.data.n_cols() - 1;
    let cfg = ExperimentConfig {
        dataset: DatasetSource::File {
            path: path.to_path_buf(),
            label_column: Some(label_column),
        },
        algorithm: AlgorithmConfig::Comet(CometConfig {
            iterations: 1000,
            k_neighbors,
            mu,
            eta1,
            ..comet_blobs_params()
        }),
        noise_levels: vec![noise],
        restarts: 5,
        seed: Some(0),
    };
    let out = run_experiment(&cfg).map_err(|e| e.to_string())?;
    Ok((out.rows[0].ari_mean, out.rows[0].ami_mean))
}

// criterion 6: the optimizer's main loop must scale linearly in n: doubling
// n multiplies the loop wall time by a factor in [1.6, 2.8].
fn complexity_scaling() -> Outcome {
    let iters = 300;
    let sizes = [2000usize, 4000, 8000];
    let matrices: Vec<DataMatrix> = sizes
        .iter()
        .map(|&n| {
            let mut rng = rng_from_seed(77);
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| vec![rng.gen::<f64>() * 20.0, rng.gen::<f64>() * 20.0])
                .collect();
            DataMatrix::from_rows(&rows).unwrap()
        })
        .collect();

    // The k-NN build is outside the main loop and excluded from timing.
    let mut optimizers = Vec::new();
    for (i, &n) in sizes.iter().enumerate() {
        let params = Hyperparams {
            n_iters: iters,
            k_neighbors: 10,
            phi: 0.5,
            gamma: 100.0,
            mu: 1.0,
            eta1: 0.5,
            block_size: (n / 11).max(1),
            ..Hyperparams::new(13)
        };
        let mut opt = Optimizer::new(&matrices[i], params).map_err(|e| e.to_string())?;
        opt.run(30); // warm up
        optimizers.push(opt);
    }

    // Round-robin repetitions cancel clock-speed drift across the
    // measurement; the minimum is the least noisy wall-time statistic.
    let mut best = [f64::INFINITY; 3];
    for _ in 0..7 {
        for (i, opt) in optimizers.iter_mut().enumerate() {
            opt.reset();
            let started = Instant::now();
            opt.run(iters);
            best[i] = best[i].min(started.elapsed().as_secs_f64());
        }
    }

    let r1 = best[1] / best[0];
    let r2 = best[2] / best[1];
    let detail = format!(
        "loop best-of-7 {:.1}ms -> {:.1}ms -> {:.1}ms; doubling ratios {r1:.2}, {r2:.2}",
        best[0] * 1e3,
        best[1] * 1e3,
        best[2] * 1e3
    );
    if (1.6..=2.8).contains(&r1) && (1.6..=2.8).contains(&r2) {
        Ok(detail)
    } else {
        Err(format!("{detail} (outside [1.6, 2.8])"))
    }
}

// criterion 7: at 20% contamination over 25 seeded runs, mean ARI must
// order comet >= mom_kmeans >= kmeans, and the comet-vs-kmeans rank-sum
// comparison must be significant at p <= 0.05.
fn robust_vs_nonrobust() -> Outcome {
    // Wide separation keeps k-means' init failures in play (bad starts are
    // not rescued by noise stepping stones); the protocol seed is fixed as
    // in every other experiment.
    let dataset = DatasetSource::Blobs {
        n_per_cluster: 500,
        centers: vec![vec![0.0, 0.0], vec![20.0, 0.0], vec![0.0, 20.0]],
    };
    let seed = Some(4);
    let comet_cfg = ExperimentConfig {
        dataset: dataset.clone(),
        algorithm: AlgorithmConfig::Comet(CometConfig {
            mu: 3.0,
            eta1: 0.3,
            iterations: 600,
            ..comet_blobs_params()
        }),
        noise_levels: vec![20.0],
        restarts: 25,
        seed,
    };
    let kmeans_cfg = ExperimentConfig {
        dataset: dataset.clone(),
        algorithm: AlgorithmConfig::Kmeans {
            k: 3,
            max_iter: 300,
        },
        ..comet_cfg.clone()
    };
    let mkm_cfg = ExperimentConfig {
        dataset,
        algorithm: AlgorithmConfig::MomKmeans {
            k: 3,
            block_size: None,
            max_iter: 300,
        },
        ..comet_cfg.clone()
    };

    let mkm_mean = run_experiment(&mkm_cfg).map_err(|e| e.to_string())?.rows[0].ari_mean;
    let report = compare(&comet_cfg, &kmeans_cfg, 10_000).map_err(|e| e.to_string())?;
    let comet_mean = run_experiment(&comet_cfg).map_err(|e| e.to_string())?.rows[0].ari_mean;
    let km_mean = run_experiment(&kmeans_cfg).map_err(|e| e.to_string())?.rows[0].ari_mean;
    let p = report.rows[0].ari_p;

    let detail = format!(
        "mean ARI comet {comet_mean:.4} >= mom_kmeans {mkm_mean:.4} >= kmeans {km_mean:.4}; p(comet>kmeans) = {p:.4}"
    );
    if comet_mean >= mkm_mean && mkm_mean >= km_mean && p <= 0.05 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// criterion 8: running bench twice on the same config produces
// byte-identical result files (timing lives in its own file).
fn bench_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config_path = dir.path().join("exp.cfg");
    std::fs::write(
        &config_path,
        "\
[experiment]
algorithm = comet
noise_levels = 0,10
restarts = 2

[dataset]
source = blobs
n_per_cluster = 40
centers = 0,0 ; 8,0 ; 0,8

[comet]
iterations = 80
k_neighbors = 5
mu = 2.0
eta1 = 0.5
",
    )
    .map_err(|e| e.to_string())?;

    let run = |out: &str| -> Result<(), String> {
        let status = Command::new(env!("CARGO_BIN_EXE_comet"))
            .args([
                "bench",
                "--config",
                config_path.to_str().unwrap(),
                "--seed",
                "3",
                "--out-dir",
                dir.path().join(out).to_str().unwrap(),
            ])
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!(
                "bench failed: {}",
                String::from_utf8_lossy(&status.stderr)
            ));
        }
        Ok(())
    };
    run("one")?;
    run("two")?;

    let mut compared = Vec::new();
    for name in ["results.tsv", "runs.tsv"] {
        let a = std::fs::read(dir.path().join("one").join(name)).map_err(|e| e.to_string())?;
        let b = std::fs::read(dir.path().join("two").join(name)).map_err(|e| e.to_string())?;
        if a != b {
            return Err(format!("{name} differs between identical bench runs"));
        }
        compared.push(name);
    }

    // Re-running plot extraction with the same arguments must be
    // byte-identical too.
    for out in ["p1", "p2"] {
        let status = Command::new(env!("CARGO_BIN_EXE_comet"))
            .args([
                "plotdata",
                "--results",
                dir.path().join("one").join("results.tsv").to_str().unwrap(),
                "--out-dir",
                dir.path().join(out).to_str().unwrap(),
            ])
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err("plotdata failed".into());
        }
    }
    let a = std::fs::read(dir.path().join("p1/plot_comet_ari.tsv")).map_err(|e| e.to_string())?;
    let b = std::fs::read(dir.path().join("p2/plot_comet_ari.tsv")).map_err(|e| e.to_string())?;
    if a != b {
        return Err("plot series differ between identical runs".into());
    }
    Ok("results.tsv, runs.tsv and plot series byte-identical across runs".into())
}

// criterion 9: with the fusion off and a single block, the normalized
// fidelity error of the fit against the true centers must decay as n grows.
fn error_decay() -> Outcome {
    let truth = [1.5, -0.5];
    let mut medians = Vec::new();
    for &n in &[100usize, 400, 1600] {
        let mut errs = Vec::new();
        for seed in 0..10u64 {
            let mut rng: Rng = rng_from_seed(derive_seed(9000, &[n as u64, seed]));
            // Bounded i.i.d. noise around a fixed center.
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    truth
                        .iter()
                        .map(|&t| t + rng.gen::<f64>() * 2.0 - 1.0)
                        .collect()
                })
                .collect();
            let x = DataMatrix::from_rows(&rows).unwrap();
            let params = Hyperparams {
                n_iters: 600,
                k_neighbors: 1,
                phi: 0.0,
                gamma: 0.0,
                mu: 1.0,
                eta1: 1.0,
                block_size: n, // single block
                alpha: 0.05,
                ..Hyperparams::new(derive_seed(9001, &[n as u64, seed]))
            };
            let fitted = comet_core::comet::fit(&x, &params).map_err(|e| e.to_string())?;
            let sq_err: f64 = (0..n)
                .map(|i| {
                    fitted
                        .agents
                        .row(i)
                        .iter()
                        .zip(&truth)
                        .map(|(a, t)| (a - t) * (a - t))
                        .sum::<f64>()
                })
                .sum();
            // Block-restricted error normalized by 2ndb with b = n.
            errs.push(sq_err / (2.0 * (n * n) as f64 * truth.len() as f64));
        }
        errs.sort_by(f64::total_cmp);
        medians.push(0.5 * (errs[4] + errs[5]));
    }

    let detail = format!(
        "median normalized error {:.3e} -> {:.3e} -> {:.3e} over n = 100, 400, 1600",
        medians[0], medians[1], medians[2]
    );
    if medians[0] > medians[1] && medians[1] > medians[2] {
        Ok(detail)
    } else {
        Err(format!("{detail} (not decreasing)"))
    }
}
