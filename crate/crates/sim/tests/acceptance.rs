//! Acceptance suite: runs every criterion and prints one PASS/FAIL line each.
//!
//! Criterion 2 cannot pass (see README, "Known failing criterion"); the suite
//! exits non-zero only if the set of failing criteria differs from that.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use afl_core::demand::zeta;
use afl_core::market::AuditReport;
use afl_core::policy::{pas, Delegate, DelegationContext, PolicySpec, WorkMode};
use afl_core::queues::objective_value;
use afl_core::rng::{stream, Purpose};
use afl_core::types::{DataOwnerState, StepDecision};
use afl_core::{DoId, Real, Record};
use afl_sim::experiment::{run_experiment, run_seed, ExperimentResult, RunOptions};
use afl_sim::output::write_metrics_csv;
use afl_sim::stats::ols_slope;
use afl_sim::{load_config, ScenarioConfig};
use rand::Rng;

/// utility, q, Q, kappa, theta, s, price, reputation
type TraceRow = (Real, Real, Real, u32, u32, u32, Real, Real);

const KNOWN_UNATTAINABLE: [u8; 1] = [2];
const SEEDS: [u64; 10] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9];

struct Verdict {
    id: u8,
    title: &'static str,
    pass: bool,
    detail: String,
}

/// Audits gathered from every world the suite runs.
#[derive(Default)]
struct AuditTally {
    runs: usize,
    steps: u64,
    task: u64,
    payment: u64,
    cap: u64,
}

impl AuditTally {
    fn add(&mut self, a: &AuditReport) {
        self.runs += 1;
        self.steps += u64::from(a.steps);
        self.task += a.task_violations;
        self.payment += a.payment_violations;
        self.cap += a.cap_violations;
    }
}

fn random_state<R: Rng>(rng: &mut R, q_positive: bool) -> DataOwnerState<Real> {
    let q_lo = u32::from(q_positive);
    DataOwnerState {
        id: DoId(0),
        reputation: rng.random_range(0.05..=1.0),
        pending_q: Real::from(rng.random_range(q_lo..=40)),
        urgency_q: rng.random_range(0.0..40.0),
        avg_demand: rng.random_range(0.0..6.0),
        availability: if q_positive {
            rng.random_range(0.01..1.5)
        } else {
            rng.random_range(0.0..1.5)
        },
        unit_cost: rng.random_range(0.0..10.0),
        reserve_price: rng.random_range(0.5..30.0),
        reputation_threshold: rng.random_range(0.0..1.0),
        theta_max: rng.random_range(0..=8),
        s_max: rng.random_range(0..=8),
        kappa_max: rng.random_range(1..=10),
        alignment_epsilon: rng.random_range(0.0..1.0),
        positive_ratings: rng.random_range(0..=50),
        current_price: 0.0,
        data_size: rng.random_range(1000..=10000),
    }
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let mut rng = stream(101, Purpose::Profiles, 0, 0);
    let mut mismatches = 0;
    let n = 1000;
    for _ in 0..n {
        let state = random_state(&mut rng, false);
        let pbar: Real = rng.random_range(0.0..50.0);
        let ctx = DelegationContext {
            avg_neighbor_price: pbar,
            eligible: if rng.random_bool(0.8) {
                vec![Delegate {
                    id: DoId(1),
                    price: pbar,
                    reputation: 1.0,
                }]
            } else {
                Vec::new()
            },
        };
        let theta = pas::decide_work(&state, WorkMode::Greedy);
        let price = state.reserve_price;
        let decision = |s: u32| StepDecision {
            accept: false,
            price,
            subdelegate: s,
            work: theta,
        };
        // feasible range: the excess over this step's work, capped, and
        // nothing at all without a qualifying neighbor
        let excess = (state.pending_q as u32).saturating_sub(theta).min(state.s_max);
        let upper = if ctx.eligible.is_empty() { 0 } else { excess };
        let best = (0..=upper)
            .map(|s| objective_value(&state, &decision(s), 0.0, pbar))
            .fold(Real::NEG_INFINITY, Real::max);
        let chosen = pas::decide_subdelegation(&state, &ctx, theta);
        if chosen > upper || objective_value(&state, &decision(chosen), 0.0, pbar) < best {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    Verdict {
        id: 1,
        title: "sub-delegation closed form vs exhaustive oracle",
        pass: mismatches == 0 && elapsed < Duration::from_secs(10),
        detail: format!("{mismatches} mismatches over {n} states in {elapsed:.2?}"),
    }
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let mut rng = stream(202, Purpose::Profiles, 0, 0);
    let constants = afl_core::market::MarketConfig::default().constants.with_horizon(1);
    let n = 1000;
    let steps = 49_000u32;
    let (mut within, mut at_upper_edge, mut worst) = (0, 0, 0.0f64);
    for _ in 0..n {
        let state = random_state(&mut rng, true);
        let z = zeta(&constants, state.alignment_epsilon, state.positive_ratings);
        let (rho, r, q, p_min) = (
            state.availability,
            state.reputation,
            state.pending_q,
            state.reserve_price,
        );
        let objective = |p: Real| z * p / r.powf(constants.a1) * (p * r * rho - q);
        let grid_step = 1e-3 * p_min;
        let (mut arg, mut best) = (p_min, objective(p_min));
        for k in 1..=steps {
            let p = p_min + Real::from(k) * grid_step;
            let v = objective(p);
            if v > best {
                best = v;
                arg = p;
            }
        }
        if arg >= p_min + Real::from(steps) * grid_step {
            at_upper_edge += 1;
        }
        let rule = pas::decide_price(&state, constants.reputation_floor).price;
        let gap = (rule - arg).abs() / p_min;
        worst = worst.max(gap);
        if gap <= 1e-3 + 1e-12 {
            within += 1;
        }
    }
    let elapsed = start.elapsed();
    Verdict {
        id: 2,
        title: "pricing closed form vs grid-search argmax",
        pass: within == n && elapsed < Duration::from_secs(60),
        detail: format!(
            "{within}/{n} within one grid step; grid argmax at the upper edge 50*p_min in {at_upper_edge}/{n}; \
             worst gap {worst:.1}*p_min ({elapsed:.2?})"
        ),
    }
}

fn paper_scale(horizon: u32) -> ScenarioConfig {
    ScenarioConfig {
        horizon,
        seeds: SEEDS.to_vec(),
        ..ScenarioConfig::default()
    }
}

fn criterion_3(tally: &mut AuditTally) -> (Verdict, Vec<u8>) {
    let start = Instant::now();
    let mut cfg = paper_scale(500);
    cfg.seeds = vec![2024];
    let (records, audit) = run_seed(&cfg, 2024).expect("valid scenario");
    tally.add(&audit);
    let elapsed = start.elapsed();
    let verdict = Verdict {
        id: 3,
        title: "one-step drift never exceeds its bound",
        pass: audit.drift_violations == 0 && audit.drift_checks == 100 * 500 && elapsed < Duration::from_secs(60),
        detail: format!(
            "{} violations over {} (owner, step) checks; largest drift minus bound {:.3e} ({elapsed:.2?})",
            audit.drift_violations, audit.drift_checks, audit.max_drift_excess
        ),
    };
    (verdict, write_metrics_csv(&records))
}

fn per_step<F: Fn(&[&Record]) -> f64>(records: &[Record], n: usize, f: F) -> Vec<f64> {
    records
        .chunks(n)
        .map(|chunk| f(&chunk.iter().collect::<Vec<_>>()))
        .collect()
}

/// Trends are taken on the seed-ensemble average of each per-step statistic;
/// the worst single seed is reported alongside.
fn criterion_4(tally: &mut AuditTally) -> Verdict {
    let cfg = paper_scale(2000);
    let n = cfg.market.n_dos;
    let half = cfg.horizon as usize / 2;
    let mut ensemble_q = vec![0.0; half];
    let mut ensemble_big_q = vec![0.0; half];
    let mut worst_seed_big_q = f64::NEG_INFINITY;
    let mut all_finite = true;
    for seed in SEEDS {
        let (records, audit) = run_seed(&cfg, seed).expect("valid scenario");
        tally.add(&audit);
        let mean_q = per_step(&records, n, |rs| rs.iter().map(|r| r.pending_q).sum::<f64>() / n as f64);
        let max_big_q = per_step(&records, n, |rs| rs.iter().map(|r| r.urgency_q).fold(0.0, f64::max));
        all_finite &= max_big_q.iter().all(|v| v.is_finite());
        worst_seed_big_q = worst_seed_big_q.max(ols_slope(&max_big_q[half..]));
        for t in 0..half {
            ensemble_q[t] += mean_q[half + t] / SEEDS.len() as f64;
            ensemble_big_q[t] += max_big_q[half + t] / SEEDS.len() as f64;
        }
    }
    let (slope_q, slope_big_q) = (ols_slope(&ensemble_q), ols_slope(&ensemble_big_q));
    Verdict {
        id: 4,
        title: "queue stability under PAS-AFL (T=2000, 10 seeds)",
        pass: all_finite && slope_q <= 0.01 && slope_big_q <= 0.01,
        detail: format!(
            "second-half slopes: mean q {slope_q:.2e}/step, max Q {slope_big_q:.2e}/step \
             (single-seed max Q slopes up to {worst_seed_big_q:.2e})"
        ),
    }
}

fn run_policy(cfg: &ScenarioConfig, name: &str, out: &Path, tally: &mut AuditTally) -> ExperimentResult {
    let opts = RunOptions {
        output_dir: Some(out.to_owned()),
        seed_offset: 0,
        quiet: true,
    };
    let result = run_experiment(&cfg.with_policy(name), &opts).expect("run succeeds");
    for s in &result.seeds {
        tally.add(&s.audit);
    }
    result
}

fn wins(pas: &ExperimentResult, other: &ExperimentResult) -> usize {
    pas.summary
        .per_seed_utility
        .iter()
        .zip(&other.summary.per_seed_utility)
        .filter(|(a, b)| a > b)
        .count()
}

fn ordering(
    id: u8,
    title: &'static str,
    pas: &ExperimentResult,
    others: &[ExperimentResult],
    needed: usize,
    elapsed: Option<Duration>,
) -> Verdict {
    let counts: Vec<(String, usize)> = others.iter().map(|o| (o.label.clone(), wins(pas, o))).collect();
    let in_time = elapsed.is_none_or(|e| e < Duration::from_secs(600));
    let detail = counts
        .iter()
        .map(|(name, w)| format!("{name} {w}/10"))
        .collect::<Vec<_>>()
        .join(", ");
    Verdict {
        id,
        title,
        pass: in_time && counts.iter().all(|(_, w)| *w >= needed),
        detail: format!(
            "PAS-AFL wins: {detail}{}",
            elapsed.map(|e| format!(" ({e:.1?})")).unwrap_or_default()
        ),
    }
}

fn criterion_9(tally: &mut AuditTally) -> Verdict {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/hand_trace.toml");
    let cfg = load_config(&path).expect("hand-trace scenario loads");
    let (records, audit) = run_seed(&cfg, cfg.seeds[0]).expect("valid scenario");
    tally.add(&audit);
    // p_min = 3, c = 0.5, theta_cap = 2, kappa_max = 3, availability 1, 1, 0.5,
    // r = 1, zeta = 1, a1 = 1, one bidder at 1.5 * 3 = 4.5, rounded arrivals.
    // step 0: q = 0 -> theta 0, p = 3, accept (3 > 0); f = 3 -> min(3, 2) = 2 offers,
    //         cap min(2, 2): kappa 2; u = 3*1*2 = 6; q' = 2; Q' = 0 (q was 0).
    // step 1: q = 2 -> theta 2, p = max(3, 2/2) = 3, accept (3 > 2); kappa 2;
    //         u = 6 - 0.5*2 = 5; q' = 2; Q' = [0 - 2 + 2]^+ = 0. Two tasks on time.
    // step 2: rho 0.5 -> theta_max 1; theta 1, p = max(3, 2/1) = 3;
    //         0.5*3*1 - 2 < 0: reject; u = -0.5; q' = 1; Q' = [0 - 1 + 2]^+ = 1.
    //         reputation stays 0.9*1 + 0.1*1 = 1.
    let expected: [TraceRow; 3] = [
        (6.0, 2.0, 0.0, 2, 0, 0, 3.0, 1.0),
        (5.0, 2.0, 0.0, 2, 2, 0, 3.0, 1.0),
        (-0.5, 1.0, 1.0, 0, 1, 0, 3.0, 1.0),
    ];
    let got: Vec<_> = records
        .iter()
        .map(|r| {
            (
                r.utility,
                r.pending_q,
                r.urgency_q,
                r.accepted_kappa,
                r.completed_theta,
                r.subdelegated_s,
                r.price,
                r.reputation,
            )
        })
        .collect();
    let mismatched = expected.iter().zip(&got).filter(|(e, g)| e != g).count() + expected.len().abs_diff(got.len());
    Verdict {
        id: 9,
        title: "three-step hand trace",
        pass: mismatched == 0,
        detail: format!("{mismatched} of 3 steps differ from the hand simulation"),
    }
}

fn main() -> ExitCode {
    let mut tally = AuditTally::default();
    let mut verdicts = vec![criterion_1(), criterion_2()];
    let (c3, c3_csv) = criterion_3(&mut tally);
    verdicts.push(c3);
    verdicts.push(criterion_4(&mut tally));

    let tmp = tempfile::tempdir().expect("temp dir");
    let cfg = paper_scale(500);
    let start = Instant::now();
    let comparison: Vec<ExperimentResult> = PolicySpec::COMPARISON
        .iter()
        .map(|name| run_policy(&cfg, name, tmp.path(), &mut tally))
        .collect();
    let compare_time = start.elapsed();
    let ablations: Vec<ExperimentResult> = PolicySpec::ABLATION[1..]
        .iter()
        .map(|name| run_policy(&cfg, name, tmp.path(), &mut tally))
        .collect();
    verdicts.push(ordering(
        5,
        "utility ordering vs six baselines (>= 9/10 seeds each)",
        &comparison[0],
        &comparison[1..],
        9,
        Some(compare_time),
    ));
    verdicts.push(ordering(
        6,
        "utility ordering vs five ablations (>= 8/10 seeds each)",
        &comparison[0],
        &ablations,
        8,
        None,
    ));

    let c9 = criterion_9(&mut tally);

    // 8: regenerate a sample of acceptance runs and compare bytes
    let mut identical = 0;
    let mut checked = 0;
    let (again, _) = {
        let mut c = paper_scale(500);
        c.seeds = vec![2024];
        run_seed(&c, 2024).expect("valid scenario")
    };
    checked += 1;
    identical += usize::from(write_metrics_csv(&again) == c3_csv);
    for (name, seed) in [("pas-afl", 0), ("rand-rand", 3), ("wo-subdelegation-r", 7)] {
        let (records, _) = run_seed(&cfg.with_policy(name), seed).expect("valid scenario");
        let on_disk = std::fs::read(tmp.path().join(name).join(format!("seed_{seed}.csv"))).expect("csv written");
        checked += 1;
        identical += usize::from(write_metrics_csv(&records) == on_disk);
    }

    verdicts.push(Verdict {
        id: 7,
        title: "task and payment conservation audits",
        pass: tally.task + tally.payment + tally.cap == 0,
        detail: format!(
            "{} task, {} payment, {} admission-cap violations over {} runs / {} steps",
            tally.task, tally.payment, tally.cap, tally.runs, tally.steps
        ),
    });
    verdicts.push(Verdict {
        id: 8,
        title: "byte-identical reruns",
        pass: identical == checked,
        detail: format!("{identical}/{checked} regenerated CSVs identical"),
    });
    verdicts.push(c9);
    verdicts.sort_by_key(|v| v.id);

    for v in &verdicts {
        println!(
            "criterion {} [{}] {}: {}",
            v.id,
            if v.pass { "PASS" } else { "FAIL" },
            v.title,
            v.detail
        );
    }
    let failed: BTreeSet<u8> = verdicts.iter().filter(|v| !v.pass).map(|v| v.id).collect();
    let expected: BTreeSet<u8> = KNOWN_UNATTAINABLE.into_iter().collect();
    if failed == expected {
        println!(
            "acceptance: {} of {} criteria pass; criterion 2 fails as documented",
            verdicts.len() - failed.len(),
            verdicts.len()
        );
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected failures {failed:?} (documented: {expected:?})");
        ExitCode::FAILURE
    }
}
