//! Plot-ready tables derived from metrics CSVs.
//!
//! Expects the layout written by the runner: one sub-directory per policy
//! holding `seed_<n>.csv` files.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use afl_core::policy::PolicySpec;
use thiserror::Error;

use crate::output::{format_real, read_metrics_csv, summary_csv, MetricsRow, RunSummary, SeedStats};

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("no metrics CSVs found under {0}")]
    MissingArtifacts(PathBuf),
    #[error("I/O error at {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed metrics CSV {path}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PlotError + '_ {
    move |source| PlotError::Io {
        path: path.to_owned(),
        source,
    }
}

fn seed_files(dir: &Path) -> Result<Vec<PathBuf>, PlotError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            name.starts_with("seed_") && name.ends_with(".csv")
        })
        .collect();
    files.sort();
    Ok(files)
}

/// Presets first in their canonical order, anything else alphabetically.
fn policy_rank(name: &str) -> (usize, String) {
    let known = PolicySpec::COMPARISON.iter().chain(&PolicySpec::ABLATION[1..]);
    let pos = known.clone().position(|&n| n == name).unwrap_or(usize::MAX);
    (pos, name.to_owned())
}

struct PolicySeries {
    name: String,
    summary: RunSummary,
    /// Per step: (utility, pending, urgency) averaged over owners and seeds.
    per_step: BTreeMap<u32, (f64, f64, f64, usize)>,
}

fn load_policy(name: &str, files: &[PathBuf]) -> Result<PolicySeries, PlotError> {
    let mut per_step: BTreeMap<u32, (f64, f64, f64, usize)> = BTreeMap::new();
    let mut stats = Vec::with_capacity(files.len());
    for path in files {
        let file = File::open(path).map_err(io_err(path))?;
        let rows: Vec<MetricsRow> = read_metrics_csv(BufReader::new(file)).map_err(|source| PlotError::Csv {
            path: path.clone(),
            source,
        })?;
        for r in &rows {
            let e = per_step.entry(r.step).or_default();
            e.0 += r.utility;
            e.1 += r.pending_q;
            e.2 += r.urgency_q;
            e.3 += 1;
        }
        stats.push(SeedStats::from_rows(&rows));
    }
    Ok(PolicySeries {
        name: name.to_owned(),
        summary: RunSummary::from_seeds(name, &stats),
        per_step,
    })
}

/// Writes `utility_vs_time.csv`, `backlog_vs_time.csv` and
/// `policy_comparison.csv` into `out_dir` and returns their paths.
pub fn emit_plot_data(runs_dir: &Path, out_dir: &Path) -> Result<Vec<PathBuf>, PlotError> {
    if !runs_dir.is_dir() {
        return Err(PlotError::MissingArtifacts(runs_dir.to_owned()));
    }
    let mut policies = Vec::new();
    for entry in fs::read_dir(runs_dir).map_err(io_err(runs_dir))? {
        let path = entry.map_err(io_err(runs_dir))?.path();
        if !path.is_dir() {
            continue;
        }
        let files = seed_files(&path)?;
        if files.is_empty() {
            continue;
        }
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_owned();
        policies.push((name, files));
    }
    if policies.is_empty() {
        return Err(PlotError::MissingArtifacts(runs_dir.to_owned()));
    }
    policies.sort_by_key(|(name, _)| policy_rank(name));
    let series = policies
        .iter()
        .map(|(name, files)| load_policy(name, files))
        .collect::<Result<Vec<_>, _>>()?;

    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut utility = String::from("policy,step,mean_utility\n");
    let mut backlog = String::from("policy,step,mean_pending_q,mean_urgency_q\n");
    for s in &series {
        for (step, (u, q, big_q, n)) in &s.per_step {
            let n = *n as f64;
            utility.push_str(&format!("{},{step},{}\n", s.name, format_real(u / n)));
            backlog.push_str(&format!(
                "{},{step},{},{}\n",
                s.name,
                format_real(q / n),
                format_real(big_q / n)
            ));
        }
    }
    let summaries: Vec<RunSummary> = series.iter().map(|s| s.summary.clone()).collect();

    let outputs = [
        ("utility_vs_time.csv", utility.into_bytes()),
        ("backlog_vs_time.csv", backlog.into_bytes()),
        ("policy_comparison.csv", summary_csv(&summaries)),
    ];
    let mut written = Vec::new();
    for (name, bytes) in outputs {
        let path = out_dir.join(name);
        fs::write(&path, bytes).map_err(io_err(&path))?;
        written.push(path);
    }
    Ok(written)
}
