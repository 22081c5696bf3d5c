//! Closed-form joint pricing, acceptance and sub-delegation rules derived
//! from the drift-plus-penalty surrogate, plus the work rule.
//!
//! Each rule reads only the owner's own state and the delegation context:
//!
//! * sub-delegation: hand off the whole excess `q - theta` (capped at
//!   `s_max`) iff `rho * p_bar - q - Q < 0` and a qualifying neighbor exists;
//! * price: `max(p_min, q / (2 rho r))`;
//! * acceptance: `x = 1` iff `rho * p * r - q > 0`;
//! * work: greedy by default, or gated on the sign of `rho * c - q - Q`.

use crate::policy::{Decided, DelegationContext, PolicyParams, WorkMode};
use crate::scalar::Scalar;
use crate::types::{DataOwnerState, StepDecision};

/// Coefficient of `s` in the surrogate (with the sign flipped): delegation
/// pays off when this is negative.
pub fn subdelegation_coefficient<T: Scalar>(state: &DataOwnerState<T>, ctx: &DelegationContext<T>) -> T {
    state.availability * ctx.avg_neighbor_price - state.pending_q - state.urgency_q
}

/// Whether the sub-delegation rule takes its delegating branch.
pub fn should_subdelegate<T: Scalar>(state: &DataOwnerState<T>, ctx: &DelegationContext<T>) -> bool {
    // NaN (zero availability against the no-neighbor sentinel) never delegates
    ctx.has_eligible() && subdelegation_coefficient(state, ctx) < T::zero()
}

/// Largest sub-delegation the owner may make after working `theta` tasks.
pub fn max_subdelegation<T: Scalar>(state: &DataOwnerState<T>, theta: u32) -> u32 {
    let excess = state.pending_q.floor_count().saturating_sub(u64::from(theta));
    excess.min(u64::from(state.s_max)) as u32
}

/// Number of pending tasks to sub-delegate this step.
pub fn decide_subdelegation<T: Scalar>(state: &DataOwnerState<T>, ctx: &DelegationContext<T>, theta: u32) -> u32 {
    if should_subdelegate(state, ctx) {
        max_subdelegation(state, theta)
    } else {
        0
    }
}

/// Result of the pricing rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceDecision<T> {
    pub price: T,
    /// Availability was zero or reputation below the floor, so the reserve
    /// price was used instead of the unbounded quotient.
    pub degenerate: bool,
}

/// `max(p_min, q / (2 rho r))`.
pub fn decide_price<T: Scalar>(state: &DataOwnerState<T>, reputation_floor: T) -> PriceDecision<T> {
    let rho = state.availability;
    let r = state.reputation;
    if !(rho > T::zero()) || r < reputation_floor {
        return PriceDecision {
            price: state.reserve_price,
            degenerate: true,
        };
    }
    let quotient = state.pending_q / (T::lit(2.0) * rho * r);
    PriceDecision {
        price: state.reserve_price.max(quotient),
        degenerate: false,
    }
}

/// Accept new offers iff `rho * p * r - q > 0`.
pub fn decide_acceptance<T: Scalar>(state: &DataOwnerState<T>, price: T) -> bool {
    state.availability * price * state.reputation - state.pending_q > T::zero()
}

/// Number of pending tasks to work on this step.
pub fn decide_work<T: Scalar>(state: &DataOwnerState<T>, mode: WorkMode) -> u32 {
    let workable = state.pending_q.floor_count().min(u64::from(state.theta_max)) as u32;
    match mode {
        WorkMode::Greedy => workable,
        WorkMode::Threshold => {
            let coeff = state.availability * state.unit_cost - state.pending_q - state.urgency_q;
            if coeff < T::zero() {
                workable
            } else {
                0
            }
        }
    }
}

/// The full joint decision.
pub fn decide_joint<T: Scalar>(
    state: &DataOwnerState<T>,
    ctx: &DelegationContext<T>,
    params: &PolicyParams<T>,
) -> Decided<T> {
    let work = decide_work(state, params.work_mode);
    let subdelegate = decide_subdelegation(state, ctx, work);
    let price = decide_price(state, params.reputation_floor);
    let accept = decide_acceptance(state, price.price);
    Decided {
        decision: StepDecision {
            accept,
            price: price.price,
            subdelegate,
            work,
        },
        price_degenerate: price.degenerate,
    }
}
