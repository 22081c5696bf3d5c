//! Domain records shared by every layer of the simulator.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

/// Data-owner identifier; doubles as the index into per-owner vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DoId(pub usize);

impl DoId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for DoId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Model-user identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MuId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskId(pub u64);

/// Constants of the log-linear demand model and the run horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketConstants<T> {
    pub a0: T,
    /// Reputation elasticity; must be strictly positive.
    pub a1: T,
    /// Elasticity with respect to positive ratings.
    pub a2: T,
    /// Weight of the quality-alignment term.
    pub a3: T,
    pub horizon: u32,
    /// Reputation values below this are clamped before entering the demand
    /// quotient, which is singular at zero.
    pub reputation_floor: T,
}

impl<T: Scalar> MarketConstants<T> {
    pub fn validate(&self) -> Result<(), InvariantViolation> {
        let finite_nonneg = |v: T| v.is_finite() && v >= T::zero();
        if !finite_nonneg(self.a0) {
            return Err(InvariantViolation::new("a0"));
        }
        if !(self.a1.is_finite() && self.a1 > T::zero()) {
            return Err(InvariantViolation::new("a1"));
        }
        if !finite_nonneg(self.a2) {
            return Err(InvariantViolation::new("a2"));
        }
        if !finite_nonneg(self.a3) {
            return Err(InvariantViolation::new("a3"));
        }
        if self.horizon < 1 {
            return Err(InvariantViolation::new("horizon_T"));
        }
        if !(self.reputation_floor > T::zero() && self.reputation_floor <= T::one()) {
            return Err(InvariantViolation::new("reputation_floor"));
        }
        Ok(())
    }
}

/// Complete per-step state of one data owner.
///
/// Queue backlogs are real-valued: the urgency queue accumulates the average
/// demand, which is fractional. Task counts that physically move between
/// queues (work, sub-delegation, admissions) are integers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataOwnerState<T> {
    pub id: DoId,
    pub reputation: T,
    /// Pending-task virtual queue.
    pub pending_q: T,
    /// Urgency (delay) virtual queue.
    pub urgency_q: T,
    /// Average number of tasks admitted per step.
    pub avg_demand: T,
    /// Availability weight for taking on new work.
    pub availability: T,
    pub unit_cost: T,
    pub reserve_price: T,
    /// Minimum reputation a neighbor needs to receive sub-delegated tasks.
    pub reputation_threshold: T,
    /// Processing capacity this step.
    pub theta_max: u32,
    pub s_max: u32,
    /// Auction admission cap; at most `kappa_max - 1` tasks arrive per step.
    pub kappa_max: u32,
    pub alignment_epsilon: T,
    pub positive_ratings: u64,
    /// Price posted at the most recent decision; zero before the first one.
    pub current_price: T,
    pub data_size: u32,
}

impl<T: Scalar> DataOwnerState<T> {
    /// Checks every state invariant, reporting the first violated field.
    pub fn validate(&self) -> Result<(), InvariantViolation> {
        validate_state(self)
    }
}

/// One federated-learning task as a transferable work unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task<T> {
    pub id: TaskId,
    pub origin_mu: MuId,
    /// Payment the current holder received for this task.
    pub unit_payment: T,
    /// Step at which the current holder received the task.
    pub arrival_step: u32,
    pub delegation_depth: u32,
    pub holder: DoId,
    /// Set once the task has been counted for on-time accounting at its
    /// current holder.
    pub judged: bool,
}

/// Undirected, irreflexive trust graph over data owners.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrustNetwork {
    neighbors: Vec<Vec<DoId>>,
}

impl TrustNetwork {
    pub fn empty(n: usize) -> Self {
        Self {
            neighbors: vec![Vec::new(); n],
        }
    }

    /// Builds a network from an edge list. Self-loops and duplicates are ignored.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut net = Self::empty(n);
        for (a, b) in edges {
            net.add_edge(DoId(a), DoId(b));
        }
        net
    }

    /// Adds an undirected edge. Returns false for self-loops and existing edges.
    pub fn add_edge(&mut self, a: DoId, b: DoId) -> bool {
        assert!(a.0 < self.len() && b.0 < self.len(), "edge endpoint out of range");
        if a == b || self.contains_edge(a, b) {
            return false;
        }
        for (x, y) in [(a, b), (b, a)] {
            let list = &mut self.neighbors[x.0];
            let pos = list.binary_search(&y).unwrap_err();
            list.insert(pos, y);
        }
        true
    }

    pub fn contains_edge(&self, a: DoId, b: DoId) -> bool {
        self.neighbors[a.0].binary_search(&b).is_ok()
    }

    /// Trusted neighbors of `id`, ascending by id.
    pub fn neighbors(&self, id: DoId) -> &[DoId] {
        &self.neighbors[id.0]
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }
}

/// Joint decision for one owner at one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDecision<T> {
    pub accept: bool,
    pub price: T,
    pub subdelegate: u32,
    pub work: u32,
}

impl<T: Scalar> StepDecision<T> {
    /// Checks the decision against the owner it was made for.
    pub fn validate_for(&self, state: &DataOwnerState<T>) -> Result<(), InvariantViolation> {
        if self.work > state.theta_max {
            return Err(InvariantViolation::new("work_theta"));
        }
        let stock = state.pending_q.floor_count();
        if u64::from(self.subdelegate) > stock.min(u64::from(state.s_max)) {
            return Err(InvariantViolation::new("subdelegate_s"));
        }
        if !(self.price.is_finite() && self.price >= state.reserve_price) {
            return Err(InvariantViolation::new("price_p"));
        }
        Ok(())
    }
}

/// Per-step, per-owner observables written to the metrics CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord<T> {
    pub step: u32,
    pub do_id: DoId,
    pub utility: T,
    pub pending_q: T,
    pub urgency_q: T,
    pub accepted_kappa: u32,
    pub completed_theta: u32,
    pub subdelegated_s: u32,
    pub price: T,
    pub reputation: T,
}

/// Name of the first invariant a value failed.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invariant violated: {field}")]
pub struct InvariantViolation {
    pub field: &'static str,
}

impl InvariantViolation {
    pub fn new(field: &'static str) -> Self {
        Self { field }
    }
}

/// Validates a [`DataOwnerState`]; the error names the first failing field.
pub fn validate_state<T: Scalar>(s: &DataOwnerState<T>) -> Result<(), InvariantViolation> {
    let unit = |v: T| v >= T::zero() && v <= T::one();
    let nonneg = |v: T| v.is_finite() && v >= T::zero();

    if !unit(s.reputation) {
        return Err(InvariantViolation::new("reputation_r"));
    }
    if !unit(s.reputation_threshold) {
        return Err(InvariantViolation::new("rep_threshold_r_min"));
    }
    if !nonneg(s.pending_q) {
        return Err(InvariantViolation::new("pending_q"));
    }
    if !nonneg(s.urgency_q) {
        return Err(InvariantViolation::new("urgency_Q"));
    }
    if !nonneg(s.avg_demand) {
        return Err(InvariantViolation::new("avg_demand_kappa_bar"));
    }
    if !nonneg(s.availability) {
        return Err(InvariantViolation::new("availability_rho"));
    }
    if !nonneg(s.unit_cost) {
        return Err(InvariantViolation::new("unit_cost_c"));
    }
    if !(s.reserve_price.is_finite() && s.reserve_price > T::zero()) {
        return Err(InvariantViolation::new("reserve_price_p_min"));
    }
    if s.kappa_max < 1 {
        return Err(InvariantViolation::new("kappa_max"));
    }
    if !nonneg(s.alignment_epsilon) {
        return Err(InvariantViolation::new("alignment_epsilon"));
    }
    // zero means no price has been posted yet
    if !(s.current_price == T::zero() || (s.current_price.is_finite() && s.current_price >= s.reserve_price)) {
        return Err(InvariantViolation::new("current_price_p"));
    }
    if !(1000..=10000).contains(&s.data_size) {
        return Err(InvariantViolation::new("data_size"));
    }
    Ok(())
}
