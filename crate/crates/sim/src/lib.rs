//! Scenario configuration, seeded experiment runner, metrics persistence,
//! summary statistics and plot-data emission for the data-owner market.

pub mod config;
pub mod experiment;
pub mod output;
pub mod plot;
pub mod stats;

pub use config::{load_config, parse_config, LoadError, PolicyAssignment, ScenarioConfig};
pub use experiment::{run_experiment, run_preset, run_seed, ExperimentResult, RunOptions, SeedRun};
pub use output::{format_real, RunSummary};
pub use plot::{emit_plot_data, PlotError};
