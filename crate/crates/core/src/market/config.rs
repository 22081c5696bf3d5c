//! Market configuration with defaults.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::demand::{ArrivalMode, DEFAULT_REPUTATION_FLOOR};
use crate::market::bidders::{BidderParams, MuStrategy};
use crate::market::reputation::ReputationParams;
use crate::policy::PolicyParams;
use crate::types::MarketConstants;
use crate::Real;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid market configuration: {field}: {reason}")]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

/// Closed real interval `[lo, hi]` sampled uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: Real,
    pub hi: Real,
}

impl Range {
    pub const fn new(lo: Real, hi: Real) -> Self {
        Self { lo, hi }
    }

    fn check(&self, field: &str, min: Real, max: Real) -> Result<(), ConfigError> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi) {
            return Err(ConfigError::new(field, "expected finite lo <= hi"));
        }
        if self.lo < min || self.hi > max {
            return Err(ConfigError::new(field, format!("must lie within [{min}, {max}]")));
        }
        Ok(())
    }
}

/// Closed integer interval `[lo, hi]` sampled uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntRange {
    pub lo: u32,
    pub hi: u32,
}

impl IntRange {
    pub const fn new(lo: u32, hi: u32) -> Self {
        Self { lo, hi }
    }

    fn check(&self, field: &str, min: u32) -> Result<(), ConfigError> {
        if self.lo > self.hi {
            return Err(ConfigError::new(field, "expected lo <= hi"));
        }
        if self.lo < min {
            return Err(ConfigError::new(field, format!("must be at least {min}")));
        }
        Ok(())
    }
}

/// How each owner's availability evolves. Processing capacity in a step is
/// `round(availability * theta_cap)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AvailabilitySchedule {
    /// Fixed per owner, drawn once.
    Constant { value: Range },
    /// Two-state chain switching between available spells and near-offline
    /// spells in which the owner is busy with other work.
    Markov {
        high: Range,
        low: Range,
        p_high_to_low: Real,
        p_low_to_high: Real,
    },
    /// Same cyclic sequence for every owner.
    Sequence { values: Vec<Real> },
}

impl Default for AvailabilitySchedule {
    fn default() -> Self {
        Self::Markov {
            high: Range::new(0.8, 1.0),
            low: Range::new(0.0, 0.1),
            p_high_to_low: 0.05,
            p_low_to_high: 0.1,
        }
    }
}

/// Per-owner parameter distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OwnerDistributions {
    pub reserve_price: Range,
    pub unit_cost: Range,
    pub reputation_threshold: Range,
    /// Processing capacity at full availability.
    pub theta_cap: IntRange,
    pub s_max: IntRange,
    pub kappa_max: IntRange,
    pub alignment_epsilon: Range,
    pub initial_reputation: Range,
    pub initial_positive_ratings: IntRange,
    pub availability: AvailabilitySchedule,
}

impl Default for OwnerDistributions {
    fn default() -> Self {
        Self {
            reserve_price: Range::new(10.0, 30.0),
            unit_cost: Range::new(2.0, 6.0),
            reputation_threshold: Range::new(0.3, 0.6),
            theta_cap: IntRange::new(2, 6),
            s_max: IntRange::new(1, 4),
            kappa_max: IntRange::new(4, 10),
            alignment_epsilon: Range::new(0.0, 1.0),
            initial_reputation: Range::new(0.6, 1.0),
            initial_positive_ratings: IntRange::new(1, 20),
            availability: AvailabilitySchedule::default(),
        }
    }
}

/// Demand-model constants (the horizon is supplied per run).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemandConstants {
    pub a0: Real,
    pub a1: Real,
    pub a2: Real,
    pub a3: Real,
    pub reputation_floor: Real,
}

impl Default for DemandConstants {
    fn default() -> Self {
        Self {
            a0: 0.0,
            a1: 0.5,
            a2: 0.1,
            a3: 0.5,
            reputation_floor: DEFAULT_REPUTATION_FLOOR,
        }
    }
}

impl DemandConstants {
    pub fn with_horizon(&self, horizon: u32) -> MarketConstants<Real> {
        MarketConstants {
            a0: self.a0,
            a1: self.a1,
            a2: self.a2,
            a3: self.a3,
            horizon,
            reputation_floor: self.reputation_floor,
        }
    }
}

/// Everything needed to build a market world apart from seed, horizon and
/// policy assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarketConfig {
    pub n_dos: usize,
    pub trust_edge_prob: Real,
    pub data_size_range: IntRange,
    pub constants: DemandConstants,
    pub owners: OwnerDistributions,
    pub bidders: BidderParams,
    pub policy_params: PolicyParams<Real>,
    pub reputation: ReputationParams,
    pub arrival_mode: ArrivalMode,
    /// Average-demand value used before any admission has been observed.
    pub kappa_bar_prior: Real,
    /// Tasks that have been handed on this many times stay put.
    pub max_delegation_depth: u32,
}

impl Default for MarketConfig {
    fn default() -> Self {
        Self {
            n_dos: 100,
            trust_edge_prob: 0.7,
            data_size_range: IntRange::new(1000, 10000),
            constants: DemandConstants::default(),
            owners: OwnerDistributions::default(),
            bidders: BidderParams::default(),
            policy_params: PolicyParams::default(),
            reputation: ReputationParams::default(),
            arrival_mode: ArrivalMode::Poisson,
            kappa_bar_prior: 1.0,
            max_delegation_depth: 3,
        }
    }
}

impl MarketConfig {
    pub fn roster(&self) -> &[MuStrategy] {
        &self.bidders.roster
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_dos == 0 {
            return Err(ConfigError::new("n_dos", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.trust_edge_prob) {
            return Err(ConfigError::new("trust_edge_prob", "must be a probability in [0, 1]"));
        }
        let ds = self.data_size_range;
        ds.check("data_size_range", 1000)?;
        if ds.hi > 10000 {
            return Err(ConfigError::new("data_size_range", "must lie within [1000, 10000]"));
        }
        self.constants
            .with_horizon(1)
            .validate()
            .map_err(|e| ConfigError::new(format!("constants.{}", e.field), "out of range"))?;

        let o = &self.owners;
        if !(o.reserve_price.lo > 0.0) {
            return Err(ConfigError::new("owners.reserve_price", "must be positive"));
        }
        o.reserve_price.check("owners.reserve_price", 0.0, Real::MAX)?;
        o.unit_cost.check("owners.unit_cost", 0.0, Real::MAX)?;
        o.reputation_threshold.check("owners.reputation_threshold", 0.0, 1.0)?;
        o.theta_cap.check("owners.theta_cap", 0)?;
        o.s_max.check("owners.s_max", 0)?;
        o.kappa_max.check("owners.kappa_max", 1)?;
        o.alignment_epsilon.check("owners.alignment_epsilon", 0.0, Real::MAX)?;
        o.initial_reputation.check("owners.initial_reputation", 0.0, 1.0)?;
        o.initial_positive_ratings.check("owners.initial_positive_ratings", 0)?;
        match &o.availability {
            AvailabilitySchedule::Constant { value } => value.check("owners.availability.value", 0.0, Real::MAX)?,
            AvailabilitySchedule::Markov {
                high,
                low,
                p_high_to_low,
                p_low_to_high,
            } => {
                high.check("owners.availability.high", 0.0, Real::MAX)?;
                low.check("owners.availability.low", 0.0, Real::MAX)?;
                for (name, p) in [("p_high_to_low", p_high_to_low), ("p_low_to_high", p_low_to_high)] {
                    if !(0.0..=1.0).contains(p) {
                        return Err(ConfigError::new(
                            format!("owners.availability.{name}"),
                            "must be a probability",
                        ));
                    }
                }
            }
            AvailabilitySchedule::Sequence { values } => {
                if values.is_empty() || values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(ConfigError::new(
                        "owners.availability.values",
                        "must be a non-empty list of non-negative numbers",
                    ));
                }
            }
        }
        self.bidders.validate()?;
        let p = &self.policy_params;
        if !(p.markup_max > 0.0 && p.markup_max.is_finite()) {
            return Err(ConfigError::new("policy_params.markup_max", "must be positive"));
        }
        if !(p.lin_gain >= 1.0 && p.lin_gain.is_finite()) {
            return Err(ConfigError::new(
                "policy_params.lin_gain",
                "must be at least 1 so prices respect the reserve",
            ));
        }
        if let Some(m) = p.rand_cap_multiplier {
            if !(m >= 1.0 && m.is_finite()) {
                return Err(ConfigError::new(
                    "policy_params.rand_cap_multiplier",
                    "must be at least 1",
                ));
            }
        }
        if !(p.reputation_floor > 0.0 && p.reputation_floor <= 1.0) {
            return Err(ConfigError::new("policy_params.reputation_floor", "must lie in (0, 1]"));
        }
        self.reputation.validate()?;
        if !(self.kappa_bar_prior >= 0.0 && self.kappa_bar_prior <= Real::from(o.kappa_max.lo)) {
            return Err(ConfigError::new(
                "kappa_bar_prior",
                "must lie in [0, smallest kappa_max] to keep the drift bound valid",
            ));
        }
        Ok(())
    }
}
