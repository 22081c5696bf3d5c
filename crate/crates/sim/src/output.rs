//! Metrics CSV layout and run summaries.
//!
//! Floats are written rounded to nine significant digits, in the shortest
//! form that reads back to the rounded value. Summaries are computed from the
//! rounded values so they can be recomputed exactly from the files.

use std::fmt::Write as _;
use std::io::Read;

use afl_core::Record;
use serde::{Deserialize, Serialize};

use crate::stats::{mean, sample_std};

pub const CSV_HEADER: [&str; 10] = [
    "step",
    "do_id",
    "utility",
    "pending_q",
    "urgency_q",
    "accepted_kappa",
    "completed_theta",
    "subdelegated_s",
    "price",
    "reputation",
];

/// `x` rounded to nine significant digits.
pub fn round9(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    let r: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

pub fn format_real(x: f64) -> String {
    round9(x).to_string()
}

/// One CSV row as read back from disk.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct MetricsRow {
    pub step: u32,
    pub do_id: usize,
    pub utility: f64,
    pub pending_q: f64,
    pub urgency_q: f64,
    pub accepted_kappa: u32,
    pub completed_theta: u32,
    pub subdelegated_s: u32,
    pub price: f64,
    pub reputation: f64,
}

impl MetricsRow {
    /// The row exactly as it will read back after writing.
    pub fn from_record(r: &Record) -> Self {
        Self {
            step: r.step,
            do_id: r.do_id.index(),
            utility: round9(r.utility),
            pending_q: round9(r.pending_q),
            urgency_q: round9(r.urgency_q),
            accepted_kappa: r.accepted_kappa,
            completed_theta: r.completed_theta,
            subdelegated_s: r.subdelegated_s,
            price: round9(r.price),
            reputation: round9(r.reputation),
        }
    }
}

pub fn write_metrics_csv(records: &[Record]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::with_capacity(records.len() * 64));
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in records {
        w.write_record([
            r.step.to_string(),
            r.do_id.index().to_string(),
            format_real(r.utility),
            format_real(r.pending_q),
            format_real(r.urgency_q),
            r.accepted_kappa.to_string(),
            r.completed_theta.to_string(),
            r.subdelegated_s.to_string(),
            format_real(r.price),
            format_real(r.reputation),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn read_metrics_csv<R: Read>(reader: R) -> Result<Vec<MetricsRow>, csv::Error> {
    csv::Reader::from_reader(reader).deserialize().collect()
}

/// Per-seed averages over every (owner, step) row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeedStats {
    pub mean_utility: f64,
    pub mean_backlog: f64,
    pub mean_urgency: f64,
    pub mean_price: f64,
    /// Fraction of rows that admitted at least one task.
    pub acceptance_rate: f64,
}

impl SeedStats {
    pub fn from_rows(rows: &[MetricsRow]) -> Self {
        let col = |f: fn(&MetricsRow) -> f64| mean(&rows.iter().map(f).collect::<Vec<_>>());
        Self {
            mean_utility: col(|r| r.utility),
            mean_backlog: col(|r| r.pending_q),
            mean_urgency: col(|r| r.urgency_q),
            mean_price: col(|r| r.price),
            acceptance_rate: col(|r| if r.accepted_kappa > 0 { 1.0 } else { 0.0 }),
        }
    }
}

/// Aggregate over seeds for one policy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub policy: String,
    pub seeds: usize,
    pub mean_utility: f64,
    /// Standard deviation of the per-seed mean utilities.
    pub std_utility: f64,
    pub mean_backlog: f64,
    pub mean_urgency: f64,
    pub mean_price: f64,
    pub acceptance_rate: f64,
    pub per_seed_utility: Vec<f64>,
}

impl RunSummary {
    pub fn from_seeds(policy: &str, stats: &[SeedStats]) -> Self {
        let per_seed_utility: Vec<f64> = stats.iter().map(|s| s.mean_utility).collect();
        let col = |f: fn(&SeedStats) -> f64| mean(&stats.iter().map(f).collect::<Vec<_>>());
        Self {
            policy: policy.to_owned(),
            seeds: stats.len(),
            mean_utility: mean(&per_seed_utility),
            std_utility: sample_std(&per_seed_utility),
            mean_backlog: col(|s| s.mean_backlog),
            mean_urgency: col(|s| s.mean_urgency),
            mean_price: col(|s| s.mean_price),
            acceptance_rate: col(|s| s.acceptance_rate),
            per_seed_utility,
        }
    }
}

const SUMMARY_HEADER: [&str; 8] = [
    "policy",
    "seeds",
    "mean_utility",
    "std_utility",
    "mean_backlog",
    "mean_urgency",
    "mean_price",
    "acceptance_rate",
];

pub fn summary_csv(rows: &[RunSummary]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SUMMARY_HEADER).expect("in-memory write");
    for s in rows {
        w.write_record([
            s.policy.clone(),
            s.seeds.to_string(),
            format_real(s.mean_utility),
            format_real(s.std_utility),
            format_real(s.mean_backlog),
            format_real(s.mean_urgency),
            format_real(s.mean_price),
            format_real(s.acceptance_rate),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn summary_text(rows: &[RunSummary]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<20} {:>5} {:>12} {:>10} {:>10} {:>10} {:>10} {:>8}",
        "policy", "seeds", "utility", "std", "backlog", "urgency", "price", "accept"
    );
    for s in rows {
        let _ = writeln!(
            out,
            "{:<20} {:>5} {:>12.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>8.4}",
            s.policy,
            s.seeds,
            s.mean_utility,
            s.std_utility,
            s.mean_backlog,
            s.mean_urgency,
            s.mean_price,
            s.acceptance_rate
        );
    }
    out
}
