use std::path::PathBuf;
use std::process::ExitCode;

use afl_core::policy::PolicySpec;
use afl_sim::config::LoadError;
use afl_sim::experiment::{run_experiment, run_preset, write_summaries, RunOptions};
use afl_sim::{emit_plot_data, load_config, PlotError};
use clap::{Args, Parser, Subcommand};

/// Data-owner decision support simulator for auction-based federated learning.
#[derive(Parser)]
#[command(name = "afl-sim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario TOML file.
    config: PathBuf,
    /// Output directory; defaults to the scenario's `output_dir`.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Added to every configured seed.
    #[arg(long, default_value_t = 0)]
    seed_offset: u64,
    /// Suppress per-seed progress lines.
    #[arg(short, long)]
    quiet: bool,
}

impl RunArgs {
    fn options(&self) -> RunOptions {
        RunOptions {
            output_dir: self.out.clone(),
            seed_offset: self.seed_offset,
            quiet: self.quiet,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario's own policy assignment.
    Run(RunArgs),
    /// Run PAS-AFL and the six baselines on shared seeds.
    Compare(RunArgs),
    /// Run PAS-AFL and its five single-component ablations on shared seeds.
    Ablate(RunArgs),
    /// Turn run directories into plot-ready tables.
    Plotdata {
        /// Directory holding one sub-directory of seed CSVs per policy.
        runs: PathBuf,
        /// Where to write the tables; defaults to `<runs>/plots`.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

fn preset(args: &RunArgs, names: &[&str]) -> anyhow::Result<()> {
    let cfg = load_config(&args.config)?;
    let results = run_preset(&cfg, names, &args.options())?;
    if !args.quiet {
        let rows: Vec<_> = results.into_iter().map(|r| r.summary).collect();
        print!("{}", afl_sim::output::summary_text(&rows));
    }
    Ok(())
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run(args) => {
            let cfg = load_config(&args.config)?;
            let opts = args.options();
            let result = run_experiment(&cfg, &opts)?;
            let root = opts.output_dir.clone().unwrap_or(cfg.output_dir.clone());
            write_summaries(&root, std::slice::from_ref(&result.summary))?;
            if !args.quiet {
                print!("{}", afl_sim::output::summary_text(&[result.summary]));
            }
        }
        Command::Compare(args) => preset(&args, &PolicySpec::COMPARISON)?,
        Command::Ablate(args) => preset(&args, &PolicySpec::ABLATION)?,
        Command::Plotdata { runs, out } => {
            let out = out.unwrap_or_else(|| runs.join("plots"));
            for path in emit_plot_data(&runs, &out)? {
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}

/// Exit code by failure category: 2 configuration, 3 missing input, 1 other.
fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.downcast_ref::<LoadError>() {
        return match e {
            LoadError::Io { .. } => 3,
            _ => 2,
        };
    }
    if err.downcast_ref::<afl_core::market::ConfigError>().is_some() {
        return 2;
    }
    if let Some(PlotError::MissingArtifacts(_)) = err.downcast_ref::<PlotError>() {
        return 3;
    }
    1
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
