//! Expected task demand faced by a data owner.
//!
//! Demand is log-linear in price, reputation and positive ratings:
//! `f(r, p) = zeta * p / r^a1` with `zeta = exp(a0 + a3 * eps) * Mp^a2`.
//! Note that demand increases with price and decreases with reputation; the
//! model is implemented as stated and the sign of `a1` is left to config.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::types::MarketConstants;

/// Default lower clamp applied to reputation inside the demand quotient.
pub const DEFAULT_REPUTATION_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum DemandError {
    #[error("price must be non-negative, got {0}")]
    NegativePrice(f64),
    #[error("demand multiplier must be non-negative, got {0}")]
    NegativeZeta(f64),
}

/// How a continuous expectation is turned into an integer arrival count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArrivalMode {
    /// Poisson draw with the expected value as mean.
    #[default]
    Poisson,
    /// Round half away from zero; consumes no randomness.
    Rounded,
}

/// Demand multiplier `exp(a0 + a3*eps) * Mp^a2`, with `0^0 = 1`.
pub fn zeta<T: Scalar>(constants: &MarketConstants<T>, alignment_epsilon: T, positive_ratings: u64) -> T {
    let base = (constants.a0 + constants.a3 * alignment_epsilon).exp();
    if positive_ratings == 0 {
        return if constants.a2 > T::zero() { T::zero() } else { base };
    }
    base * T::count(positive_ratings).powf(constants.a2)
}

/// Expected number of task offers at `price` for an owner with `reputation`.
pub fn expected_demand<T: Scalar>(
    price: T,
    reputation: T,
    zeta: T,
    a1: T,
    reputation_floor: T,
) -> Result<T, DemandError> {
    if !(price >= T::zero()) {
        return Err(DemandError::NegativePrice(price.to_f64().unwrap_or(f64::NAN)));
    }
    if !(zeta >= T::zero()) {
        return Err(DemandError::NegativeZeta(zeta.to_f64().unwrap_or(f64::NAN)));
    }
    let r = reputation.max(reputation_floor);
    Ok(zeta * price / r.powf(a1))
}

/// Draws an integer arrival count with mean `expected` and clamps it to
/// `[0, cap - 1]`.
pub fn realize_demand<T: Scalar, R: Rng + ?Sized>(expected: T, cap: u32, rng: &mut R, mode: ArrivalMode) -> u32 {
    let ceiling = u64::from(cap.saturating_sub(1));
    let expected = expected.to_f64().unwrap_or(0.0);
    if !(expected > 0.0) || ceiling == 0 {
        return 0;
    }
    let raw = match mode {
        ArrivalMode::Rounded => {
            if expected >= ceiling as f64 {
                ceiling
            } else {
                expected.round() as u64
            }
        }
        ArrivalMode::Poisson => match Poisson::new(expected) {
            Ok(dist) => {
                let x: f64 = dist.sample(rng);
                if x >= ceiling as f64 {
                    ceiling
                } else {
                    x as u64
                }
            }
            // only reachable for non-finite means
            Err(_) => ceiling,
        },
    };
    raw.min(ceiling) as u32
}
