//! Reputation and rating dynamics.
//!
//! Each task is judged once at its current holder: either when it is
//! completed within the on-time window, or when it first becomes overdue.
//! Reputation moves toward the step's on-time ratio by an exponential moving
//! average; positive ratings count on-time completions.

use serde::{Deserialize, Serialize};

use crate::market::config::ConfigError;
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReputationParams {
    /// Weight on the previous reputation, in `[0, 1)`.
    pub ema_beta: Real,
    /// A task completed at most this many steps after reaching its holder is on time.
    pub on_time_window: u32,
}

impl Default for ReputationParams {
    fn default() -> Self {
        Self {
            ema_beta: 0.9,
            on_time_window: 5,
        }
    }
}

impl ReputationParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..1.0).contains(&self.ema_beta) {
            return Err(ConfigError::new("reputation.ema_beta", "must lie in [0, 1)"));
        }
        if self.on_time_window == 0 {
            return Err(ConfigError::new("reputation.on_time_window", "must be at least 1"));
        }
        Ok(())
    }
}

/// Returns the updated `(reputation, positive_ratings)`.
///
/// With `due == 0` reputation is unchanged; otherwise it moves toward
/// `on_time / due`. The result is clamped to `[floor, 1]`.
pub fn update_reputation(
    reputation: Real,
    positive_ratings: u64,
    on_time: u32,
    due: u32,
    params: &ReputationParams,
    floor: Real,
) -> (Real, u64) {
    debug_assert!(on_time <= due, "on-time completions exceed judged tasks");
    let r = if due > 0 {
        let ratio = Real::from(on_time) / Real::from(due);
        params.ema_beta * reputation + (1.0 - params.ema_beta) * ratio
    } else {
        reputation
    };
    (r.clamp(floor, 1.0), positive_ratings + u64::from(on_time))
}
