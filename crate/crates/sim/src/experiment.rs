//! Seeded experiment runner.

use std::fs;
use std::path::{Path, PathBuf};

use afl_core::market::{AuditReport, World};
use afl_core::policy::PolicySpec;
use afl_core::Record;
use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::output::{self, MetricsRow, RunSummary, SeedStats};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides the scenario's `output_dir`.
    pub output_dir: Option<PathBuf>,
    /// Added to every configured seed.
    pub seed_offset: u64,
    pub quiet: bool,
}

impl RunOptions {
    fn root(&self, cfg: &ScenarioConfig) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| cfg.output_dir.clone())
    }
}

/// Outcome of one seed.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub csv_path: PathBuf,
    pub stats: SeedStats,
    pub audit: AuditReport,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub label: String,
    pub dir: PathBuf,
    pub summary: RunSummary,
    pub seeds: Vec<SeedRun>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    policy: &'a str,
    seed: u64,
    config: &'a ScenarioConfig,
}

/// Builds and runs one world to the horizon.
pub fn run_seed(cfg: &ScenarioConfig, seed: u64) -> Result<(Vec<Record>, AuditReport)> {
    let policies: Vec<PolicySpec> = cfg.policy.resolve(cfg.market.n_dos)?;
    let mut world = World::new(cfg.market.clone(), cfg.horizon, seed, &policies)?;
    let records = world.run();
    Ok((records, world.audit().clone()))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

/// Runs every seed of `cfg`, writing `<root>/<policy>/seed_<n>.csv`, a
/// manifest per seed and the resolved config, and returns the summary.
pub fn run_experiment(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<ExperimentResult> {
    cfg.validate()?;
    let label = cfg.policy.label();
    let dir = opts.root(cfg).join(&label);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    write(&dir.join("resolved_config.toml"), cfg.resolved_toml().as_bytes())?;

    let seeds: Vec<u64> = cfg.seeds.iter().map(|s| s + opts.seed_offset).collect();
    let runs: Vec<SeedRun> = seeds
        .par_iter()
        .map(|&seed| -> Result<SeedRun> {
            let (records, audit) = run_seed(cfg, seed)?;
            let csv_path = dir.join(format!("seed_{seed}.csv"));
            write(&csv_path, &output::write_metrics_csv(&records))?;
            let manifest = Manifest {
                tool: env!("CARGO_PKG_NAME"),
                version: env!("CARGO_PKG_VERSION"),
                policy: &label,
                seed,
                config: cfg,
            };
            let json = serde_json::to_vec_pretty(&manifest)?;
            write(&dir.join(format!("seed_{seed}.manifest.json")), &json)?;
            let rows: Vec<MetricsRow> = records.iter().map(MetricsRow::from_record).collect();
            let stats = SeedStats::from_rows(&rows);
            if !opts.quiet {
                eprintln!(
                    "{label} seed {seed}: mean utility {:.4}, audit violations {}",
                    stats.mean_utility,
                    audit.total_violations()
                );
            }
            Ok(SeedRun {
                seed,
                csv_path,
                stats,
                audit,
            })
        })
        .collect::<Result<_>>()?;

    let stats: Vec<SeedStats> = runs.iter().map(|r| r.stats).collect();
    Ok(ExperimentResult {
        summary: RunSummary::from_seeds(&label, &stats),
        label,
        dir,
        seeds: runs,
    })
}

/// Writes `summary.csv` and `summary.txt` under `root`.
pub fn write_summaries(root: &Path, rows: &[RunSummary]) -> Result<()> {
    fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
    write(&root.join("summary.csv"), &output::summary_csv(rows))?;
    write(&root.join("summary.txt"), output::summary_text(rows).as_bytes())
}

/// Runs `cfg` once per policy name with shared seeds, then writes the
/// combined summary.
pub fn run_preset(cfg: &ScenarioConfig, names: &[&str], opts: &RunOptions) -> Result<Vec<ExperimentResult>> {
    let results = names
        .iter()
        .map(|name| run_experiment(&cfg.with_policy(name), opts))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<RunSummary> = results.iter().map(|r| r.summary.clone()).collect();
    write_summaries(&opts.root(cfg), &rows)?;
    Ok(results)
}
