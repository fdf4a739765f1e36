//! Tab-separated output files.
//!
//! Every file starts with `#`-prefixed provenance lines echoing the full
//! configuration. `results.tsv` and `runs.tsv` are byte-deterministic given
//! the config; wall-clock measurements go to the separate `timing.tsv`,
//! which is the one output that varies between runs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use crate::experiment::{CompareReport, ExperimentOutput, ResultRow};

fn header(provenance: &[String], title: &str) -> String {
    let mut out = format!("# {title}\n");
    for line in provenance {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out
}

pub fn write_results(dir: &Path, out: &ExperimentOutput) -> Result<PathBuf> {
    let mut text = header(&out.provenance, "aggregated results");
    text.push_str(
        "algorithm\tnoise_percent\trestarts\tari_mean\tari_std\tami_mean\tami_std\tkstar_mean\tkstar_std\n",
    );
    for r in &out.rows {
        text.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            r.algorithm,
            r.noise_percent,
            r.restarts,
            r.ari_mean,
            r.ari_std,
            r.ami_mean,
            r.ami_std,
            r.kstar_mean,
            r.kstar_std
        ));
    }
    let path = dir.join("results.tsv");
    fs::write(&path, text)?;
    Ok(path)
}

pub fn write_runs(dir: &Path, out: &ExperimentOutput) -> Result<PathBuf> {
    let mut text = header(&out.provenance, "per-run scores");
    text.push_str("algorithm\tnoise_percent\trestart\tari\tami\tk_star\n");
    for r in &out.runs {
        text.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            r.algorithm, r.noise_percent, r.restart, r.ari, r.ami, r.k_star
        ));
    }
    let path = dir.join("runs.tsv");
    fs::write(&path, text)?;
    Ok(path)
}

/// Wall-clock seconds per row; not expected to reproduce between runs.
pub fn write_timing(dir: &Path, out: &ExperimentOutput) -> Result<PathBuf> {
    let mut text = header(&out.provenance, "wall-clock timing (non-deterministic)");
    text.push_str("algorithm\tnoise_percent\trestarts\twall_secs_total\n");
    for r in &out.rows {
        text.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            r.algorithm, r.noise_percent, r.restarts, r.wall_secs_total
        ));
    }
    let path = dir.join("timing.tsv");
    fs::write(&path, text)?;
    Ok(path)
}

/// One `noise_percent mean std` series file per algorithm present in the
/// rows, named `plot_<algorithm>_<metric>.tsv`.
pub fn write_plot_data(
    dir: &Path,
    rows: &[ResultRow],
    metric: &str,
    provenance: &[String],
) -> Result<Vec<PathBuf>> {
    let select: fn(&ResultRow) -> (f64, f64) = match metric {
        "ari" => |r| (r.ari_mean, r.ari_std),
        "ami" => |r| (r.ami_mean, r.ami_std),
        other => bail!("unknown metric {other:?} (expected ari or ami)"),
    };
    let mut algorithms: Vec<&str> = rows.iter().map(|r| r.algorithm.as_str()).collect();
    algorithms.sort_unstable();
    algorithms.dedup();

    let mut paths = Vec::new();
    for algo in algorithms {
        let mut text = header(provenance, &format!("{metric} series for {algo}"));
        text.push_str("noise_percent\tmean\tstd\n");
        let mut series: Vec<&ResultRow> = rows.iter().filter(|r| r.algorithm == algo).collect();
        series.sort_by(|a, b| a.noise_percent.total_cmp(&b.noise_percent));
        for r in series {
            let (mean, std) = select(r);
            text.push_str(&format!("{}\t{mean}\t{std}\n", r.noise_percent));
        }
        let path = dir.join(format!("plot_{algo}_{metric}.tsv"));
        fs::write(&path, text)?;
        paths.push(path);
    }
    Ok(paths)
}

pub fn write_compare(dir: &Path, report: &CompareReport, provenance: &[String]) -> Result<PathBuf> {
    let mut text = header(provenance, "rank-sum comparison");
    text.push_str(&format!(
        "# one-sided: {} > {}; dagger marks p <= {}\n",
        report.algorithm_a, report.algorithm_b, report.alpha
    ));
    text.push_str("noise_percent\tari_p\tari_sig\tami_p\tami_sig\n");
    for r in &report.rows {
        text.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            r.noise_percent,
            r.ari_p,
            if r.ari_significant(report.alpha) {
                "\u{2020}"
            } else {
                "-"
            },
            r.ami_p,
            if r.ami_significant(report.alpha) {
                "\u{2020}"
            } else {
                "-"
            },
        ));
    }
    let path = dir.join("compare.tsv");
    fs::write(&path, text)?;
    Ok(path)
}

/// Read back a `results.tsv` produced by [`write_results`].
pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading results {}", path.display()))?;
    let mut rows = Vec::new();
    for line in text.lines() {
        if line.starts_with('#') || line.starts_with("algorithm\t") || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 9 {
            bail!("malformed results row: {line:?}");
        }
        let num = |i: usize| -> Result<f64> {
            fields[i]
                .parse()
                .with_context(|| format!("bad number {:?} in {line:?}", fields[i]))
        };
        rows.push(ResultRow {
            algorithm: fields[0].to_string(),
            noise_percent: num(1)?,
            restarts: fields[2].parse().context("bad restart count")?,
            ari_mean: num(3)?,
            ari_std: num(4)?,
            ami_mean: num(5)?,
            ami_std: num(6)?,
            kstar_mean: num(7)?,
            kstar_std: num(8)?,
            wall_secs_total: 0.0,
        });
    }
    if rows.is_empty() {
        bail!("no data rows in {}", path.display());
    }
    Ok(rows)
}

/// Write the optimizer trace of a single run.
pub fn write_trace(path: &Path, trace: &[comet_core::comet::TraceRow]) -> Result<()> {
    let mut text = String::from("iteration\tmedian_block_loss\tcost\tactive_edges\n");
    for row in trace {
        text.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            row.iteration, row.median_loss, row.cost, row.active_edges
        ));
    }
    fs::write(path, text)?;
    Ok(())
}

/// Format run records for terminal display.
pub fn summarize_rows(rows: &[ResultRow]) -> String {
    let mut out = String::from(
        "algorithm  noise%  restarts  ari(mean+/-std)      ami(mean+/-std)      k*(mean)\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{:<10} {:<7} {:<9} {:.4} +/- {:.4}     {:.4} +/- {:.4}     {:.2}\n",
            r.algorithm,
            r.noise_percent,
            r.restarts,
            r.ari_mean,
            r.ari_std,
            r.ami_mean,
            r.ami_std,
            r.kstar_mean
        ));
    }
    out
}
