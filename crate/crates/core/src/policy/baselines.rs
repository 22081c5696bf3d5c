//! Baseline pricing and sub-delegation strategies.
//!
//! Pricing: uniform random (`rand`), random markup above the reserve
//! (`ampp`), and a fixed multiple of the reserve (`lin`). Sub-delegation:
//! random amount on a coin flip (`rand`) or as much as allowed (`greedy`).
//! Baselines have no acceptance rule of their own and always accept.

use rand::Rng;

use crate::policy::{decide, pas, Decided, DelegationContext, PolicyError, PolicyParams, PolicySpec};
use crate::scalar::Scalar;
use crate::types::DataOwnerState;

fn uniform<T: Scalar, R: Rng + ?Sized>(rng: &mut R, lo: T, hi: T) -> T {
    let u: f64 = rng.random();
    lo + (hi - lo) * T::lit(u)
}

/// Uniform draw on `[p_min, p_cap]`.
pub fn price_rand<T: Scalar, R: Rng + ?Sized>(state: &DataOwnerState<T>, params: &PolicyParams<T>, rng: &mut R) -> T {
    let lo = state.reserve_price;
    let hi = params.rand_cap(lo).max(lo);
    uniform(rng, lo, hi)
}

/// `p_min * (1 + U(0, markup_max))`.
pub fn price_ampp<T: Scalar, R: Rng + ?Sized>(state: &DataOwnerState<T>, params: &PolicyParams<T>, rng: &mut R) -> T {
    let markup = uniform(rng, T::zero(), params.markup_max.max(T::zero()));
    state.reserve_price * (T::one() + markup)
}

/// `gain * p_min`.
pub fn price_lin<T: Scalar>(state: &DataOwnerState<T>, params: &PolicyParams<T>) -> T {
    params.lin_gain * state.reserve_price
}

/// With probability 1/2 nothing; otherwise a uniform amount in
/// `[0, min(floor(q) - theta, s_max)]`. Zero when no neighbor qualifies.
pub fn subdel_rand<T: Scalar, R: Rng + ?Sized>(
    state: &DataOwnerState<T>,
    ctx: &DelegationContext<T>,
    theta: u32,
    rng: &mut R,
) -> u32 {
    let coin: bool = rng.random();
    let upper = pas::max_subdelegation(state, theta);
    if !coin || !ctx.has_eligible() || upper == 0 {
        return 0;
    }
    rng.random_range(0..=upper)
}

/// As much as allowed: `min(floor(q) - theta, s_max)` when a neighbor qualifies.
pub fn subdel_greedy<T: Scalar>(state: &DataOwnerState<T>, ctx: &DelegationContext<T>, theta: u32) -> u32 {
    if ctx.has_eligible() {
        pas::max_subdelegation(state, theta)
    } else {
        0
    }
}

/// Decision of a named baseline (`rand-rand`, ..., `lin-greedy`).
pub fn baseline_joint<T: Scalar, R: Rng + ?Sized>(
    name: &str,
    state: &DataOwnerState<T>,
    ctx: &DelegationContext<T>,
    params: &PolicyParams<T>,
    rng: &mut R,
) -> Result<Decided<T>, PolicyError> {
    if !PolicySpec::COMPARISON[1..].contains(&name) {
        return Err(PolicyError::Unknown(name.to_owned()));
    }
    let spec = PolicySpec::by_name(name)?;
    Ok(decide(&spec, state, ctx, params, rng))
}
