//! The market world and its step function.
//!
//! One step runs, in order:
//!
//! 1. snapshot the owners and build each one's delegation context;
//! 2. every owner decides against the snapshot;
//! 3. posted-price clearing admits new tasks;
//! 4. sub-delegated tasks move to neighbors' inboxes;
//! 5. each owner works its oldest pending tasks;
//! 6. pending and urgency queues update;
//! 7. reputation and ratings update;
//! 8. one metrics record per owner is emitted.
//!
//! Audits run alongside and are collected in [`AuditReport`] rather than
//! aborting the run.

use rand::Rng;

use crate::demand::{expected_demand, realize_demand, zeta};
use crate::market::bidders::{admission_cap, run_auction, ModelUser};
use crate::market::config::{AvailabilitySchedule, ConfigError, MarketConfig, Range};
use crate::market::network::generate_trust_network;
use crate::market::reputation::update_reputation;
use crate::market::routing::{route_subdelegations, Transfer};
use crate::policy::{build_context, decide, Decided, DelegationContext, PolicySpec};
use crate::queues::{drift_bound, lyapunov_value, update_pending_queue, update_urgency_queue, utility, RunningMean};
use crate::rng::{stream, Purpose};
use crate::types::{
    DataOwnerState, DoId, MarketConstants, MetricsRecord, MuId, StepDecision, Task, TaskId, TrustNetwork,
};
use crate::Real;

const DRIFT_TOLERANCE: Real = 1e-9;

/// Counts of audit checks and failures over a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AuditReport {
    pub steps: u32,
    pub drift_checks: u64,
    pub drift_violations: u64,
    /// Largest `realized drift - bound` seen; negative when always slack.
    pub max_drift_excess: Real,
    pub task_violations: u64,
    pub payment_violations: u64,
    pub cap_violations: u64,
    pub state_violations: u64,
    /// First few failure descriptions.
    pub messages: Vec<String>,
}

impl AuditReport {
    const MAX_MESSAGES: usize = 20;

    pub fn conservation_violations(&self) -> u64 {
        self.task_violations + self.payment_violations
    }

    pub fn total_violations(&self) -> u64 {
        self.drift_violations
            + self.task_violations
            + self.payment_violations
            + self.cap_violations
            + self.state_violations
    }

    fn note(&mut self, msg: String) {
        if self.messages.len() < Self::MAX_MESSAGES {
            self.messages.push(msg);
        }
    }
}

/// Running money and task totals used by the conservation audits.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Ledger {
    pub tasks_created: u64,
    pub tasks_completed: u64,
    /// Paid by MUs, summed on the MU side.
    pub mu_payments: Real,
    /// Received from MUs, summed on the owner side.
    pub owner_auction_revenue: Vec<Real>,
    pub delegation_paid: Vec<Real>,
    pub delegation_received: Vec<Real>,
}

/// Everything one step produced.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub records: Vec<MetricsRecord<Real>>,
    pub decisions: Vec<StepDecision<Real>>,
    pub transfers: Vec<Transfer>,
}

/// Per-owner availability process state.
#[derive(Debug, Clone, PartialEq)]
enum Availability {
    Fixed(Real),
    Chain { high: bool },
    Cycle,
}

#[derive(Debug, Clone)]
pub struct World {
    config: MarketConfig,
    constants: MarketConstants<Real>,
    seed: u64,
    step: u32,
    network: TrustNetwork,
    states: Vec<DataOwnerState<Real>>,
    mus: Vec<ModelUser>,
    policies: Vec<PolicySpec>,
    theta_cap: Vec<u32>,
    availability: Vec<Availability>,
    /// Pending tasks per owner, oldest first.
    pending: Vec<Vec<Task<Real>>>,
    admitted_mean: Vec<RunningMean<Real>>,
    next_task: u64,
    ledger: Ledger,
    audit: AuditReport,
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, r: Range) -> Real {
    r.lo + (r.hi - r.lo) * rng.random::<Real>()
}

fn capacity(availability: Real, cap: u32) -> u32 {
    (availability * Real::from(cap)).round().max(0.0) as u32
}

fn close(a: Real, b: Real) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

impl World {
    /// Builds a world from config. `policies` holds one entry per owner or a
    /// single entry applied to all.
    pub fn new(config: MarketConfig, horizon: u32, seed: u64, policies: &[PolicySpec]) -> Result<Self, ConfigError> {
        config.validate()?;
        let n = config.n_dos;
        let policies = match policies.len() {
            1 => vec![policies[0]; n],
            len if len == n => policies.to_vec(),
            len => {
                return Err(ConfigError::new(
                    "policy",
                    format!("expected 1 or {n} policy names, got {len}"),
                ))
            }
        };
        let constants = config.constants.with_horizon(horizon);
        let network = generate_trust_network(n, config.trust_edge_prob, &mut stream(seed, Purpose::Network, 0, 0));

        let o = &config.owners;
        let mut states = Vec::with_capacity(n);
        let mut theta_cap = Vec::with_capacity(n);
        let mut availability = Vec::with_capacity(n);
        for i in 0..n {
            let mut rng = stream(seed, Purpose::Profiles, i as u64, 0);
            let reserve_price = uniform(&mut rng, o.reserve_price);
            let unit_cost = uniform(&mut rng, o.unit_cost);
            let reputation_threshold = uniform(&mut rng, o.reputation_threshold);
            let cap = rng.random_range(o.theta_cap.lo..=o.theta_cap.hi);
            let s_max = rng.random_range(o.s_max.lo..=o.s_max.hi);
            let kappa_max = rng.random_range(o.kappa_max.lo..=o.kappa_max.hi);
            let alignment_epsilon = uniform(&mut rng, o.alignment_epsilon);
            let reputation = uniform(&mut rng, o.initial_reputation);
            let positive_ratings =
                u64::from(rng.random_range(o.initial_positive_ratings.lo..=o.initial_positive_ratings.hi));
            let data_size = rng.random_range(config.data_size_range.lo..=config.data_size_range.hi);
            let avail = match &o.availability {
                AvailabilitySchedule::Constant { value } => Availability::Fixed(uniform(&mut rng, *value)),
                AvailabilitySchedule::Markov {
                    p_high_to_low,
                    p_low_to_high,
                    ..
                } => {
                    let total = p_high_to_low + p_low_to_high;
                    let stationary_high = if total > 0.0 { p_low_to_high / total } else { 1.0 };
                    Availability::Chain {
                        high: rng.random::<Real>() < stationary_high,
                    }
                }
                AvailabilitySchedule::Sequence { .. } => Availability::Cycle,
            };
            states.push(DataOwnerState {
                id: DoId(i),
                reputation,
                pending_q: 0.0,
                urgency_q: 0.0,
                avg_demand: config.kappa_bar_prior,
                availability: 0.0,
                unit_cost,
                reserve_price,
                reputation_threshold,
                theta_max: 0,
                s_max,
                kappa_max,
                alignment_epsilon,
                positive_ratings,
                // owners start out posting their reserve price
                current_price: reserve_price,
                data_size,
            });
            theta_cap.push(cap);
            availability.push(avail);
        }

        let mus = config
            .roster()
            .iter()
            .enumerate()
            .map(|(k, &strategy)| {
                let mut rng = stream(seed, Purpose::Bidders, k as u64, 0);
                ModelUser::new(MuId(k), strategy, &states, &config.bidders, &mut rng)
            })
            .collect();

        let mut world = Self {
            constants,
            seed,
            step: 0,
            network,
            pending: vec![Vec::new(); n],
            admitted_mean: vec![RunningMean::new(config.kappa_bar_prior); n],
            states,
            mus,
            policies,
            theta_cap,
            availability,
            next_task: 0,
            ledger: Ledger {
                owner_auction_revenue: vec![0.0; n],
                delegation_paid: vec![0.0; n],
                delegation_received: vec![0.0; n],
                ..Ledger::default()
            },
            audit: AuditReport {
                max_drift_excess: Real::NEG_INFINITY,
                ..AuditReport::default()
            },
            config,
        };
        world.refresh_availability(false);
        Ok(world)
    }

    pub fn step_index(&self) -> u32 {
        self.step
    }

    pub fn horizon(&self) -> u32 {
        self.constants.horizon
    }

    pub fn is_done(&self) -> bool {
        self.step >= self.constants.horizon
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn states(&self) -> &[DataOwnerState<Real>] {
        &self.states
    }

    pub fn network(&self) -> &TrustNetwork {
        &self.network
    }

    pub fn model_users(&self) -> &[ModelUser] {
        &self.mus
    }

    pub fn policies(&self) -> &[PolicySpec] {
        &self.policies
    }

    pub fn pending_tasks(&self, id: DoId) -> &[Task<Real>] {
        &self.pending[id.index()]
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn audit(&self) -> &AuditReport {
        &self.audit
    }

    /// Sets availability and processing capacity for the current step.
    fn refresh_availability(&mut self, advance: bool) {
        let t = self.step;
        for i in 0..self.states.len() {
            let mut rng = stream(self.seed, Purpose::Availability, i as u64, u64::from(t));
            let value = match (&mut self.availability[i], &self.config.owners.availability) {
                (Availability::Fixed(v), _) => *v,
                (
                    Availability::Chain { high },
                    AvailabilitySchedule::Markov {
                        high: hi_range,
                        low: lo_range,
                        p_high_to_low,
                        p_low_to_high,
                    },
                ) => {
                    if advance {
                        let flip = rng.random::<Real>();
                        *high = if *high {
                            flip >= *p_high_to_low
                        } else {
                            flip < *p_low_to_high
                        };
                    }
                    uniform(&mut rng, if *high { *hi_range } else { *lo_range })
                }
                (_, AvailabilitySchedule::Sequence { values }) => values[t as usize % values.len()],
                (state, schedule) => unreachable!("availability state {state:?} does not match {schedule:?}"),
            };
            let s = &mut self.states[i];
            s.availability = value;
            s.theta_max = capacity(value, self.theta_cap[i]);
        }
    }

    /// Highest payment among `id`'s pending tasks that may still be handed on.
    fn reference_payment(&self, id: DoId) -> Option<Real> {
        self.pending[id.index()]
            .iter()
            .filter(|t| t.delegation_depth < self.config.max_delegation_depth)
            .map(|t| t.unit_payment)
            .reduce(Real::max)
    }

    /// Delegation contexts against the current snapshot.
    pub fn contexts(&self) -> Vec<DelegationContext<Real>> {
        (0..self.states.len())
            .map(|i| build_context(&self.network, DoId(i), &self.states, self.reference_payment(DoId(i))))
            .collect()
    }

    /// Every owner's decision for the current step. Reads only the current
    /// snapshot and the step's policy streams, so it can be recomputed from
    /// an archived copy of the world.
    pub fn decide_all(&self) -> Vec<Decided<Real>> {
        let contexts = self.contexts();
        self.decide_with(&contexts)
    }

    fn decide_with(&self, contexts: &[DelegationContext<Real>]) -> Vec<Decided<Real>> {
        self.states
            .iter()
            .zip(contexts)
            .enumerate()
            .map(|(i, (state, ctx))| {
                let mut rng = stream(self.seed, Purpose::Policy, i as u64, u64::from(self.step));
                decide(&self.policies[i], state, ctx, &self.config.policy_params, &mut rng)
            })
            .collect()
    }

    fn offers(&self, decisions: &[StepDecision<Real>]) -> Vec<u32> {
        let c = &self.constants;
        self.states
            .iter()
            .zip(decisions)
            .enumerate()
            .map(|(i, (s, d))| {
                if !d.accept {
                    return 0;
                }
                let z = zeta(c, s.alignment_epsilon, s.positive_ratings);
                let f = expected_demand(d.price, s.reputation, z, c.a1, c.reputation_floor)
                    .expect("validated prices and constants are non-negative");
                let mut rng = stream(self.seed, Purpose::Demand, i as u64, u64::from(self.step));
                realize_demand(f, s.kappa_max, &mut rng, self.config.arrival_mode)
            })
            .collect()
    }

    fn tasks_held(&self, inbox: &[Vec<Task<Real>>]) -> u64 {
        let pending: usize = self.pending.iter().map(Vec::len).sum();
        let transit: usize = inbox.iter().map(Vec::len).sum();
        (pending + transit) as u64
    }

    fn audit_tasks(&mut self, inbox: &[Vec<Task<Real>>], stage: &str) {
        let held = self.tasks_held(inbox);
        if self.ledger.tasks_created != held + self.ledger.tasks_completed {
            self.audit.task_violations += 1;
            let msg = format!(
                "step {} ({stage}): created {} != held {held} + completed {}",
                self.step, self.ledger.tasks_created, self.ledger.tasks_completed
            );
            self.audit.note(msg);
        }
    }

    /// Advances the world by one step.
    pub fn step(&mut self) -> StepReport {
        let t = self.step;
        let n = self.states.len();
        let snapshot = self.states.clone();

        // 1-2: decide against the snapshot
        let contexts = self.contexts();
        let decided = self.decide_with(&contexts);
        let decisions: Vec<StepDecision<Real>> = decided.iter().map(|d| d.decision).collect();

        // 3: clearing
        let offers = self.offers(&decisions);
        let seed = self.seed;
        let outcome = run_auction(
            &self.mus,
            &snapshot,
            &decisions,
            &offers,
            &self.config.bidders,
            &mut stream(seed, Purpose::ClearingOrder, u64::from(t), 0),
            |id| stream(seed, Purpose::ClearingOrder, u64::from(t), 1 + id.index() as u64),
        );
        let mut fresh: Vec<Vec<Task<Real>>> = vec![Vec::new(); n];
        let mut mu_paid = 0.0;
        for i in 0..n {
            let kappa = outcome.kappa(DoId(i));
            if kappa > admission_cap(&snapshot[i]) || (kappa > 0 && !decisions[i].accept) {
                self.audit.cap_violations += 1;
                self.audit
                    .note(format!("step {t}: owner {i} admitted {kappa} past its cap"));
            }
            for a in &outcome.admitted[i] {
                self.ledger.owner_auction_revenue[i] += a.payment;
                fresh[i].push(Task {
                    id: TaskId(self.next_task),
                    origin_mu: a.mu,
                    unit_payment: a.payment,
                    arrival_step: t,
                    delegation_depth: 0,
                    holder: DoId(i),
                    judged: false,
                });
                self.next_task += 1;
                self.ledger.tasks_created += 1;
            }
        }
        for spent in &outcome.mu_spend {
            mu_paid += spent;
        }
        self.ledger.mu_payments += mu_paid;

        // 4: routing; inbound room keeps total arrivals below kappa_max
        let mut inbox: Vec<Vec<Task<Real>>> = vec![Vec::new(); n];
        let mut room: Vec<u32> = (0..n)
            .map(|i| {
                snapshot[i]
                    .kappa_max
                    .saturating_sub(1)
                    .saturating_sub(outcome.kappa(DoId(i)))
            })
            .collect();
        let transfers = route_subdelegations(
            &mut self.pending,
            &mut inbox,
            &mut room,
            &snapshot,
            &decisions,
            &self.network,
            self.config.max_delegation_depth,
            t,
        );
        let mut delegated = vec![0u32; n];
        let mut inbound = vec![0u32; n];
        for tr in &transfers {
            delegated[tr.from.index()] += 1;
            inbound[tr.to.index()] += 1;
            self.ledger.delegation_paid[tr.from.index()] += tr.payment;
            self.ledger.delegation_received[tr.to.index()] += tr.payment;
        }
        // new admissions are held but not yet queued
        let fresh_count: usize = fresh.iter().map(Vec::len).sum();
        let held = self.tasks_held(&inbox) + fresh_count as u64;
        if self.ledger.tasks_created != held + self.ledger.tasks_completed {
            self.audit.task_violations += 1;
            self.audit.note(format!("step {t} (routing): task count mismatch"));
        }

        // 5: FIFO work and on-time accounting
        let window = self.config.reputation.on_time_window;
        let mut on_time = vec![0u32; n];
        let mut due = vec![0u32; n];
        for i in 0..n {
            let theta = decisions[i].work as usize;
            let take = theta.min(self.pending[i].len());
            let done: Vec<Task<Real>> = self.pending[i].drain(..take).collect();
            if done.len() != theta {
                self.audit.task_violations += 1;
                self.audit
                    .note(format!("step {t}: owner {i} worked {} of {theta} tasks", done.len()));
            }
            self.ledger.tasks_completed += done.len() as u64;
            for task in &done {
                if !task.judged {
                    due[i] += 1;
                    if t - task.arrival_step <= window {
                        on_time[i] += 1;
                    }
                }
            }
            // tasks that can no longer finish on time are judged now
            for task in &mut self.pending[i] {
                if !task.judged && t - task.arrival_step >= window {
                    task.judged = true;
                    due[i] += 1;
                }
            }
        }

        // 6-8: queues, reputation, metrics
        let mut records = Vec::with_capacity(n);
        for i in 0..n {
            let before = &snapshot[i];
            let d = decisions[i];
            let kappa = outcome.kappa(DoId(i));
            let realized = StepDecision {
                subdelegate: delegated[i],
                ..d
            };
            let arrivals = kappa + inbound[i];
            let q_next = update_pending_queue(before.pending_q, d.work, delegated[i], true, arrivals);
            let big_q_next = update_urgency_queue(
                before.urgency_q,
                d.work,
                delegated[i],
                before.avg_demand,
                before.pending_q > 0.0,
            );

            let bound = drift_bound(before, &realized, arrivals).bound;
            let drift = lyapunov_value(q_next, big_q_next) - lyapunov_value(before.pending_q, before.urgency_q);
            self.audit.drift_checks += 1;
            self.audit.max_drift_excess = self.audit.max_drift_excess.max(drift - bound);
            if drift > bound + DRIFT_TOLERANCE {
                self.audit.drift_violations += 1;
                self.audit
                    .note(format!("step {t}: owner {i} drift {drift} exceeds bound {bound}"));
            }

            let mut queue = std::mem::take(&mut inbox[i]);
            queue.append(&mut fresh[i]);
            self.pending[i].append(&mut queue);
            if q_next != self.pending[i].len() as Real {
                self.audit.task_violations += 1;
                self.audit.note(format!(
                    "step {t}: owner {i} queue {q_next} but holds {} tasks",
                    self.pending[i].len()
                ));
            }

            self.admitted_mean[i].push(kappa);
            let (reputation, ratings) = update_reputation(
                before.reputation,
                before.positive_ratings,
                on_time[i],
                due[i],
                &self.config.reputation,
                self.config.policy_params.reputation_floor,
            );

            let u = utility(before, &realized, Real::from(kappa), contexts[i].avg_neighbor_price);

            let s = &mut self.states[i];
            s.pending_q = q_next;
            s.urgency_q = big_q_next;
            s.avg_demand = self.admitted_mean[i].value();
            s.reputation = reputation;
            s.positive_ratings = ratings;
            s.current_price = d.price;
            if let Err(e) = s.validate() {
                self.audit.state_violations += 1;
                self.audit.note(format!("step {t}: owner {i} invalid {}", e.field));
            }

            records.push(MetricsRecord {
                step: t,
                do_id: DoId(i),
                utility: u,
                pending_q: q_next,
                urgency_q: big_q_next,
                accepted_kappa: kappa,
                completed_theta: d.work,
                subdelegated_s: delegated[i],
                price: d.price,
                reputation,
            });
        }
        self.audit_tasks(&inbox, "end");

        let owner_side: Real = self.ledger.owner_auction_revenue.iter().sum();
        let paid: Real = self.ledger.delegation_paid.iter().sum();
        let received: Real = self.ledger.delegation_received.iter().sum();
        if !close(owner_side, self.ledger.mu_payments) || !close(paid, received) {
            self.audit.payment_violations += 1;
            self.audit.note(format!(
                "step {t}: MU paid {} vs owners got {owner_side}; delegators paid {paid} vs delegates got {received}",
                self.ledger.mu_payments
            ));
        }

        self.audit.steps += 1;
        self.step += 1;
        self.refresh_availability(true);
        StepReport {
            records,
            decisions,
            transfers,
        }
    }

    /// Steps until the horizon, returning every record in step order.
    pub fn run(&mut self) -> Vec<MetricsRecord<Real>> {
        let mut out = Vec::with_capacity(self.states.len() * self.constants.horizon as usize);
        while !self.is_done() {
            out.extend(self.step().records);
        }
        out
    }
}
