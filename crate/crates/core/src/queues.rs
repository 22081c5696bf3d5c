//! Virtual-queue dynamics, the quadratic Lyapunov function and its one-step
//! drift bound, cost and utility accounting, and the drift-plus-penalty
//! surrogate that the closed-form decision rules maximize.

use thiserror::Error;

use crate::scalar::Scalar;
use crate::types::{DataOwnerState, StepDecision};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum QueueError {
    #[error("average demand needs at least one observation")]
    EmptyHistory,
}

#[inline]
fn positive_part<T: Scalar>(v: T) -> T {
    v.max(T::zero())
}

/// Pending-queue update: `[q - theta - s]^+ + x * kappa`.
pub fn update_pending_queue<T: Scalar>(q: T, theta: u32, s: u32, accept: bool, kappa: u32) -> T {
    let served = T::count(u64::from(theta) + u64::from(s));
    let arrivals = if accept { T::count(u64::from(kappa)) } else { T::zero() };
    positive_part(q - served) + arrivals
}

/// Urgency-queue update: `[Q - theta - s + kappa_bar * 1{q > 0}]^+`.
pub fn update_urgency_queue<T: Scalar>(big_q: T, theta: u32, s: u32, kappa_bar: T, q_is_positive: bool) -> T {
    let served = T::count(u64::from(theta) + u64::from(s));
    let growth = if q_is_positive { kappa_bar } else { T::zero() };
    positive_part(big_q - served + growth)
}

/// Arithmetic mean of an admission history.
pub fn average_demand<T: Scalar>(history: &[u32]) -> Result<T, QueueError> {
    if history.is_empty() {
        return Err(QueueError::EmptyHistory);
    }
    let total: u64 = history.iter().map(|&k| u64::from(k)).sum();
    Ok(T::count(total) / T::count(history.len() as u64))
}

/// Causal running mean of admissions: the value at step `t` averages steps
/// `0..t`, and a prior is reported before the first observation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunningMean<T> {
    prior: T,
    sum: u64,
    n: u64,
}

impl<T: Scalar> RunningMean<T> {
    pub fn new(prior: T) -> Self {
        Self { prior, sum: 0, n: 0 }
    }

    pub fn value(&self) -> T {
        if self.n == 0 {
            self.prior
        } else {
            T::count(self.sum) / T::count(self.n)
        }
    }

    pub fn push(&mut self, kappa: u32) {
        self.sum += u64::from(kappa);
        self.n += 1;
    }
}

/// `(q^2 + Q^2) / 2`.
pub fn lyapunov_value<T: Scalar>(q: T, big_q: T) -> T {
    (q * q + big_q * big_q) / T::lit(2.0)
}

/// Decomposed upper bound on the one-step Lyapunov drift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftBoundParts<T> {
    /// Constant `(theta_max + s_max)^2 + kappa_max^2`.
    pub xi: T,
    /// `q * (arrivals - theta - s)`.
    pub q_term: T,
    /// `Q * (kappa_bar - theta - s)`.
    pub urgency_term: T,
    pub bound: T,
}

/// The drift constant for an owner.
pub fn xi<T: Scalar>(state: &DataOwnerState<T>) -> T {
    let served = T::count(u64::from(state.theta_max) + u64::from(state.s_max));
    let k = T::count(u64::from(state.kappa_max));
    served * served + k * k
}

/// Upper bound on `L(t+1) - L(t)` for the given decision and realized
/// arrivals into the pending queue.
pub fn drift_bound<T: Scalar>(
    state: &DataOwnerState<T>,
    decision: &StepDecision<T>,
    arrivals: u32,
) -> DriftBoundParts<T> {
    let xi = xi(state);
    let served = T::count(u64::from(decision.work) + u64::from(decision.subdelegate));
    let q_term = state.pending_q * (T::count(u64::from(arrivals)) - served);
    let urgency_term = state.urgency_q * (state.avg_demand - served);
    DriftBoundParts {
        xi,
        q_term,
        urgency_term,
        bound: xi + q_term + urgency_term,
    }
}

/// Sub-delegation cost `p_bar * s`. Zero whenever nothing is delegated, even
/// if the neighbor price is the no-neighbor sentinel.
pub fn subdelegation_cost<T: Scalar>(avg_neighbor_price: T, s: u32) -> T {
    if s == 0 {
        T::zero()
    } else {
        avg_neighbor_price * T::count(u64::from(s))
    }
}

/// Training cost `c * theta`.
pub fn training_cost<T: Scalar>(unit_cost: T, theta: u32) -> T {
    unit_cost * T::count(u64::from(theta))
}

/// Revenue term `x * p * r * f`.
pub fn revenue<T: Scalar>(state: &DataOwnerState<T>, decision: &StepDecision<T>, demand: T) -> T {
    if decision.accept {
        decision.price * state.reputation * demand
    } else {
        T::zero()
    }
}

/// Per-step utility: revenue minus sub-delegation and training costs.
pub fn utility<T: Scalar>(
    state: &DataOwnerState<T>,
    decision: &StepDecision<T>,
    demand: T,
    avg_neighbor_price: T,
) -> T {
    revenue(state, decision, demand)
        - subdelegation_cost(avg_neighbor_price, decision.subdelegate)
        - training_cost(state.unit_cost, decision.work)
}

/// Drift-plus-penalty surrogate:
///
/// ```text
/// -s [rho p_bar - q - Q] - xi - theta [rho c - q - Q] + [rho x p r f - q x f]
/// ```
pub fn objective_value<T: Scalar>(
    state: &DataOwnerState<T>,
    decision: &StepDecision<T>,
    demand: T,
    avg_neighbor_price: T,
) -> T {
    let rho = state.availability;
    let backlog = state.pending_q + state.urgency_q;
    let s_term = if decision.subdelegate == 0 {
        T::zero()
    } else {
        -T::count(u64::from(decision.subdelegate)) * (rho * avg_neighbor_price - backlog)
    };
    let theta_term = -T::count(u64::from(decision.work)) * (rho * state.unit_cost - backlog);
    let x_term = if decision.accept {
        rho * decision.price * state.reputation * demand - state.pending_q * demand
    } else {
        T::zero()
    };
    s_term - xi(state) + theta_term + x_term
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::fixtures::idle_state;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn decision(accept: bool, price: f64, s: u32, theta: u32) -> StepDecision<f64> {
        StepDecision {
            accept,
            price,
            subdelegate: s,
            work: theta,
        }
    }

    #[test]
    fn pending_queue_examples() {
        assert_eq!(update_pending_queue(5.0, 2, 1, true, 3), 5.0);
        assert_eq!(update_pending_queue(0.0, 0, 0, false, 9), 0.0);
        assert_eq!(update_pending_queue(2.0, 5, 0, true, 1), 1.0);
    }

    #[test]
    fn urgency_queue_examples() {
        assert_eq!(update_urgency_queue(4.0, 1, 1, 2.0, true), 4.0);
        assert_eq!(update_urgency_queue(0.0, 0, 0, 5.0, false), 0.0);
        assert_eq!(update_urgency_queue(1.0, 3, 0, 0.5, true), 0.0);
    }

    #[test]
    fn average_demand_examples() {
        assert_eq!(average_demand::<f64>(&[1, 2, 3]).unwrap(), 2.0);
        assert_eq!(average_demand::<f64>(&[0, 0, 0, 0]).unwrap(), 0.0);
        assert_eq!(average_demand::<f64>(&[7]).unwrap(), 7.0);
        assert_eq!(average_demand::<f64>(&[]), Err(QueueError::EmptyHistory));
    }

    #[test]
    fn running_mean_is_causal() {
        let mut m = RunningMean::new(1.0);
        assert_eq!(m.value(), 1.0);
        m.push(2);
        assert_eq!(m.value(), 2.0);
        m.push(0);
        m.push(1);
        assert_eq!(m.value(), 1.0);
    }

    #[test]
    fn lyapunov_examples() {
        assert_eq!(lyapunov_value(3.0, 4.0), 12.5);
        assert_eq!(lyapunov_value(0.0, 0.0), 0.0);
        assert_eq!(lyapunov_value(1.0, 0.0), 0.5);
    }

    fn bound_state() -> DataOwnerState<f64> {
        let mut s = idle_state();
        s.theta_max = 2;
        s.s_max = 1;
        s.kappa_max = 3;
        s
    }

    #[test]
    fn drift_bound_examples() {
        let s = bound_state();
        let parts = drift_bound(&s, &decision(false, 1.0, 0, 0), 0);
        assert_eq!(parts.xi, 18.0);
        assert_eq!(parts.bound, 18.0);

        let parts = drift_bound(&s, &decision(true, 1.0, 1, 2), 2);
        assert_eq!(parts.bound, parts.xi);

        let mut s = bound_state();
        s.pending_q = 5.0;
        s.urgency_q = 2.0;
        s.avg_demand = 1.0;
        let parts = drift_bound(&s, &decision(true, 1.0, 1, 1), 3);
        assert_eq!(parts.q_term, 5.0);
        assert_eq!(parts.urgency_term, -2.0);
        assert_eq!(parts.bound, parts.xi + 3.0);
        assert_eq!(parts.bound, parts.xi + parts.q_term + parts.urgency_term);
    }

    #[test]
    fn cost_examples() {
        assert_eq!(subdelegation_cost(2.0, 3), 6.0);
        assert_eq!(subdelegation_cost(5.0, 0), 0.0);
        assert_eq!(subdelegation_cost(0.0, 4), 0.0);
        assert_eq!(subdelegation_cost(f64::INFINITY, 0), 0.0);
        assert_eq!(training_cost(0.5, 2), 1.0);
        assert_eq!(training_cost(3.0, 0), 0.0);
        assert_eq!(training_cost(0.0, 9), 0.0);
    }

    #[test]
    fn utility_examples() {
        let mut s = idle_state();
        s.reputation = 1.0;
        s.unit_cost = 0.5;
        assert_eq!(utility(&s, &decision(true, 2.0, 1, 2), 3.0, 1.0), 4.0);
        assert_eq!(utility(&s, &decision(false, 2.0, 0, 0), 3.0, 1.0), 0.0);
        s.unit_cost = 1.0;
        assert_eq!(utility(&s, &decision(false, 2.0, 1, 1), 3.0, 2.0), -3.0);
    }

    #[test]
    fn objective_examples() {
        let mut s = idle_state();
        s.availability = 0.0;
        s.reputation = 0.0;
        let zero = decision(false, 1.0, 0, 0);
        assert_eq!(objective_value(&s, &zero, 0.0, 0.0), -xi(&s));

        let mut s = bound_state();
        s.availability = 1.0;
        s.pending_q = 3.0;
        s.urgency_q = 2.0;
        let v = objective_value(&s, &decision(false, 1.0, 2, 0), 0.0, 1.0);
        assert_eq!(v, 8.0 - xi(&s));

        let mut s = bound_state();
        s.availability = 1.0;
        s.reputation = 1.0;
        s.pending_q = 1.0;
        let v = objective_value(&s, &decision(true, 2.0, 0, 0), 3.0, 1.0);
        assert_eq!(v, 3.0 - xi(&s));
    }

    #[test]
    fn objective_is_linear_in_s_and_theta() {
        let mut s = bound_state();
        s.availability = 0.7;
        s.reputation = 0.8;
        s.pending_q = 6.0;
        s.urgency_q = 2.5;
        s.unit_cost = 1.3;
        s.theta_max = 10;
        s.s_max = 10;
        let at = |sv: u32, th: u32| objective_value(&s, &decision(true, 2.0, sv, th), 1.7, 3.1);
        let ds: Vec<f64> = (1..4).map(|k| at(k + 1, 2) - at(k, 2)).collect();
        let dt: Vec<f64> = (1..4).map(|k| at(2, k + 1) - at(2, k)).collect();
        for w in ds.windows(2).chain(dt.windows(2)) {
            assert!((w[0] - w[1]).abs() < 1e-9);
        }
        assert_relative_eq!(ds[0], -(0.7 * 3.1 - 8.5), epsilon = 1e-12);
        assert_relative_eq!(dt[0], -(0.7 * 1.3 - 8.5), epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn queues_never_negative(
            q in 0.0f64..50.0, big_q in 0.0f64..50.0,
            theta in 0u32..20, s in 0u32..20, accept: bool, kappa in 0u32..20,
            kbar in 0.0f64..10.0,
        ) {
            prop_assert!(update_pending_queue(q, theta, s, accept, kappa) >= 0.0);
            prop_assert!(update_urgency_queue(big_q, theta, s, kbar, q > 0.0) >= 0.0);
        }

        #[test]
        fn utility_decomposes(
            accept: bool, p in 0.0f64..20.0, r in 0.0f64..1.0, f in 0.0f64..10.0,
            pbar in 0.0f64..20.0, s in 0u32..10, c in 0.0f64..5.0, theta in 0u32..10,
        ) {
            let mut st = idle_state();
            st.reputation = r;
            st.unit_cost = c;
            let d = decision(accept, p, s, theta);
            let u = utility(&st, &d, f, pbar);
            let composed = revenue(&st, &d, f) - subdelegation_cost(pbar, s) - training_cost(c, theta);
            prop_assert_eq!(u.to_bits(), composed.to_bits());
        }

        /// The realized drift never exceeds the bound when the bound's
        /// preconditions hold: served <= q, arrivals and kappa_bar at most
        /// kappa_max.
        #[test]
        fn realized_drift_within_bound(
            q_int in 0u32..40, big_q in 0.0f64..60.0,
            theta_max in 0u32..8, s_max in 0u32..8, kappa_max in 1u32..10,
            theta_frac in 0.0f64..1.0, s_frac in 0.0f64..1.0,
            arrivals_frac in 0.0f64..1.0, kbar_frac in 0.0f64..1.0,
        ) {
            let mut st = idle_state();
            st.theta_max = theta_max;
            st.s_max = s_max;
            st.kappa_max = kappa_max;
            st.pending_q = f64::from(q_int);
            st.urgency_q = big_q;
            st.avg_demand = kbar_frac * f64::from(kappa_max);
            let theta = ((theta_frac * f64::from(theta_max)) as u32).min(q_int);
            let s = ((s_frac * f64::from(s_max)) as u32).min(q_int - theta);
            let arrivals = (arrivals_frac * f64::from(kappa_max - 1)).round() as u32;
            let d = decision(true, 1.0, s, theta);
            let q1 = update_pending_queue(st.pending_q, theta, s, true, arrivals);
            let big_q1 = update_urgency_queue(big_q, theta, s, st.avg_demand, q_int > 0);
            let drift = lyapunov_value(q1, big_q1) - lyapunov_value(st.pending_q, big_q);
            let b = drift_bound(&st, &d, arrivals);
            prop_assert!(drift <= b.bound + 1e-9, "drift {} bound {}", drift, b.bound);
        }
    }
}
