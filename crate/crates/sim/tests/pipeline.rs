use std::fs;
use std::path::Path;

use afl_core::policy::PolicySpec;
use afl_sim::output::{read_metrics_csv, MetricsRow, RunSummary, SeedStats};
use afl_sim::stats::mean;
use afl_sim::{emit_plot_data, parse_config, run_experiment, run_preset, PlotError, RunOptions, ScenarioConfig};

const SMALL: &str = r#"
horizon = 25
seeds = [3, 4, 5]
n_dos = 10
"#;

fn small() -> ScenarioConfig {
    parse_config(SMALL, Path::new("small.toml")).unwrap()
}

fn quiet_into(dir: &Path) -> RunOptions {
    RunOptions {
        output_dir: Some(dir.to_path_buf()),
        seed_offset: 0,
        quiet: true,
    }
}

fn rows(path: &Path) -> Vec<MetricsRow> {
    read_metrics_csv(fs::File::open(path).unwrap()).unwrap()
}

#[test]
fn summary_recomputes_from_written_csvs() {
    let tmp = tempfile::tempdir().unwrap();
    let result = run_experiment(&small(), &quiet_into(tmp.path())).unwrap();
    assert_eq!(result.seeds.len(), 3);

    let stats: Vec<SeedStats> = result
        .seeds
        .iter()
        .map(|s| SeedStats::from_rows(&rows(&s.csv_path)))
        .collect();
    let again = RunSummary::from_seeds(&result.label, &stats);
    assert!((again.mean_utility - result.summary.mean_utility).abs() < 1e-9);
    assert!((again.mean_backlog - result.summary.mean_backlog).abs() < 1e-9);

    let per_seed = mean(&result.summary.per_seed_utility);
    assert!((per_seed - result.summary.mean_utility).abs() < 1e-12);
}

#[test]
fn seed_file_covers_every_owner_and_step() {
    let tmp = tempfile::tempdir().unwrap();
    let result = run_experiment(&small(), &quiet_into(tmp.path())).unwrap();
    let csv = rows(&result.seeds[0].csv_path);
    assert_eq!(csv.len(), 25 * 10);
    let steps: Vec<u32> = csv.iter().filter(|r| r.do_id == 0).map(|r| r.step).collect();
    assert_eq!(steps, (0..25).collect::<Vec<_>>());
    assert!(result.dir.join("resolved_config.toml").exists());
    assert!(result.dir.join("seed_3.manifest.json").exists());
}

#[test]
fn resolved_config_loads_back_to_the_same_scenario() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small();
    let result = run_experiment(&cfg, &quiet_into(tmp.path())).unwrap();
    let path = result.dir.join("resolved_config.toml");
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(parse_config(&text, &path).unwrap(), cfg);
}

#[test]
fn seed_offset_shifts_file_names() {
    let tmp = tempfile::tempdir().unwrap();
    let opts = RunOptions {
        seed_offset: 100,
        ..quiet_into(tmp.path())
    };
    let result = run_experiment(&small(), &opts).unwrap();
    let seeds: Vec<u64> = result.seeds.iter().map(|s| s.seed).collect();
    assert_eq!(seeds, vec![103, 104, 105]);
    assert!(result.dir.join("seed_103.csv").exists());
}

#[test]
fn comparison_plot_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small();
    cfg.seeds = vec![1];
    run_preset(&cfg, &PolicySpec::COMPARISON, &quiet_into(tmp.path())).unwrap();
    let out = tmp.path().join("plots");
    let written = emit_plot_data(tmp.path(), &out).unwrap();
    assert_eq!(written.len(), 3);

    let bars = fs::read_to_string(out.join("policy_comparison.csv")).unwrap();
    let lines: Vec<&str> = bars.lines().collect();
    assert_eq!(lines.len(), 1 + 7);
    assert!(lines[1].starts_with("pas-afl,"));

    let series = fs::read_to_string(out.join("utility_vs_time.csv")).unwrap();
    assert_eq!(series.lines().count(), 1 + 7 * 25);
    assert!(tmp.path().join("summary.csv").exists());
}

#[test]
fn plot_data_requires_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let err = emit_plot_data(tmp.path(), &tmp.path().join("plots")).unwrap_err();
    assert!(matches!(err, PlotError::MissingArtifacts(_)), "{err}");
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = run_experiment(&small(), &quiet_into(a.path())).unwrap();
    let rb = run_experiment(&small(), &quiet_into(b.path())).unwrap();
    for (x, y) in ra.seeds.iter().zip(&rb.seeds) {
        assert_eq!(fs::read(&x.csv_path).unwrap(), fs::read(&y.csv_path).unwrap());
    }
}
