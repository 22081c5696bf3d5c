//! Model-user bidders and posted-price clearing.
//!
//! The six bidding strategies are parameterized stand-ins: each MU holds a
//! private per-owner valuation and bids relative to it or to the owner's
//! reserve price. Bids shrink with the owner's reputation, so a distrusted
//! owner clears fewer offers at the same price.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::market::config::{ConfigError, Range};
use crate::types::{DataOwnerState, DoId, MuId, StepDecision};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MuStrategy {
    /// Uniform bid below the valuation.
    Random,
    /// Bids the full valuation.
    Greedy,
    Lin,
    Bmub,
    FedbidderSimple,
    /// Adds a data-quality bonus on top of the reserve-price gain.
    FedbidderComplex,
}

impl MuStrategy {
    pub const ALL: [MuStrategy; 6] = [
        MuStrategy::Random,
        MuStrategy::Greedy,
        MuStrategy::Lin,
        MuStrategy::Bmub,
        MuStrategy::FedbidderSimple,
        MuStrategy::FedbidderComplex,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BidderParams {
    pub roster: Vec<MuStrategy>,
    /// Spending limit per MU per step.
    pub budget_per_step: Real,
    /// Valuations are drawn as `p_min * U(lo, hi)` per (MU, owner).
    pub valuation_multiplier: Range,
    /// Bids are multiplied by `reputation^reputation_exponent`.
    pub reputation_exponent: Real,
    pub lin_gain: Real,
    pub bmub_gain: Real,
    pub fedbidder_simple_gain: Real,
    pub fedbidder_complex_gain: Real,
    /// Extra gain at the largest data size for `fedbidder-complex`.
    pub fedbidder_quality_bonus: Real,
}

impl Default for BidderParams {
    fn default() -> Self {
        Self {
            roster: MuStrategy::ALL.to_vec(),
            budget_per_step: 1e4,
            valuation_multiplier: Range::new(1.0, 2.0),
            reputation_exponent: 1.0,
            lin_gain: 1.3,
            bmub_gain: 1.1,
            fedbidder_simple_gain: 1.2,
            fedbidder_complex_gain: 1.0,
            fedbidder_quality_bonus: 0.4,
        }
    }
}

impl BidderParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.budget_per_step >= 0.0) {
            return Err(ConfigError::new("bidders.budget_per_step", "must be non-negative"));
        }
        let v = self.valuation_multiplier;
        if !(v.lo >= 0.0 && v.lo <= v.hi && v.hi.is_finite()) {
            return Err(ConfigError::new(
                "bidders.valuation_multiplier",
                "expected 0 <= lo <= hi",
            ));
        }
        for (name, g) in [
            ("reputation_exponent", self.reputation_exponent),
            ("lin_gain", self.lin_gain),
            ("bmub_gain", self.bmub_gain),
            ("fedbidder_simple_gain", self.fedbidder_simple_gain),
            ("fedbidder_complex_gain", self.fedbidder_complex_gain),
            ("fedbidder_quality_bonus", self.fedbidder_quality_bonus),
        ] {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(ConfigError::new(format!("bidders.{name}"), "must be non-negative"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelUser {
    pub id: MuId,
    pub strategy: MuStrategy,
    pub budget_per_step: Real,
    /// Indexed by owner.
    pub valuation_per_do: Vec<Real>,
}

impl ModelUser {
    /// Draws valuations for every owner.
    pub fn new<R: Rng + ?Sized>(
        id: MuId,
        strategy: MuStrategy,
        owners: &[DataOwnerState<Real>],
        params: &BidderParams,
        rng: &mut R,
    ) -> Self {
        let v = params.valuation_multiplier;
        let valuation_per_do = owners
            .iter()
            .map(|s| s.reserve_price * (v.lo + (v.hi - v.lo) * rng.random::<Real>()))
            .collect();
        Self {
            id,
            strategy,
            budget_per_step: params.budget_per_step,
            valuation_per_do,
        }
    }

    /// Unit bid for one task at `owner`.
    pub fn bid<R: Rng + ?Sized>(&self, owner: &DataOwnerState<Real>, params: &BidderParams, rng: &mut R) -> Real {
        let weight = owner.reputation.max(0.0).powf(params.reputation_exponent);
        let value = self.valuation_per_do[owner.id.index()];
        let p_min = owner.reserve_price;
        let raw = match self.strategy {
            MuStrategy::Random => value * rng.random::<Real>(),
            MuStrategy::Greedy => value,
            MuStrategy::Lin => params.lin_gain * p_min,
            MuStrategy::Bmub => params.bmub_gain * p_min,
            MuStrategy::FedbidderSimple => params.fedbidder_simple_gain * p_min,
            MuStrategy::FedbidderComplex => {
                let quality = (Real::from(owner.data_size) - 1000.0) / 9000.0;
                (params.fedbidder_complex_gain + params.fedbidder_quality_bonus * quality.clamp(0.0, 1.0)) * p_min
            }
        };
        raw * weight
    }
}

/// A cleared task request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Admission {
    pub mu: MuId,
    pub bid: Real,
    /// Posted price paid by the MU.
    pub payment: Real,
}

/// Admissions per owner, in clearing order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AuctionOutcome {
    pub admitted: Vec<Vec<Admission>>,
    /// Total spent per MU.
    pub mu_spend: Vec<Real>,
}

impl AuctionOutcome {
    pub fn kappa(&self, id: DoId) -> u32 {
        self.admitted[id.index()].len() as u32
    }
}

/// Most tasks an owner may admit in one step: `min(theta_max, kappa_max - 1)`.
pub fn admission_cap(state: &DataOwnerState<Real>) -> u32 {
    state.theta_max.min(state.kappa_max.saturating_sub(1))
}

/// Posted-price clearing.
///
/// Owners are visited in an order shuffled by `order_rng`. An accepting
/// owner receives `offers[i]` task requests, each from a uniformly chosen MU
/// bidding per its strategy; these draws come from `owner_rng(i)` so they do
/// not depend on the other owners. Requests are ranked by bid (descending, ties by MU id) and
/// admitted while the bid covers the posted price, the MU can still pay, and
/// the owner's admission cap is not reached. Declining owners receive nothing.
pub fn run_auction<R: Rng + ?Sized, S: Rng>(
    mus: &[ModelUser],
    states: &[DataOwnerState<Real>],
    decisions: &[StepDecision<Real>],
    offers: &[u32],
    params: &BidderParams,
    order_rng: &mut R,
    mut owner_rng: impl FnMut(DoId) -> S,
) -> AuctionOutcome {
    let n = states.len();
    let mut outcome = AuctionOutcome {
        admitted: vec![Vec::new(); n],
        mu_spend: vec![0.0; mus.len()],
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(order_rng);
    for i in order {
        let decision = &decisions[i];
        if !decision.accept || mus.is_empty() || offers[i] == 0 {
            continue;
        }
        let owner = &states[i];
        let mut rng = owner_rng(DoId(i));
        let mut requests: Vec<(Real, usize)> = (0..offers[i])
            .map(|_| {
                let m = rng.random_range(0..mus.len());
                (mus[m].bid(owner, params, &mut rng), m)
            })
            .collect();
        requests.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let cap = admission_cap(owner) as usize;
        let price = decision.price;
        for (bid, m) in requests {
            if outcome.admitted[i].len() >= cap || bid < price {
                break;
            }
            if outcome.mu_spend[m] + price > mus[m].budget_per_step {
                continue;
            }
            outcome.mu_spend[m] += price;
            outcome.admitted[i].push(Admission {
                mu: mus[m].id,
                bid,
                payment: price,
            });
        }
    }
    outcome
}
