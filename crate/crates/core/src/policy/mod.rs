//! Decision policies for data owners.
//!
//! A policy is a combination of four rules evaluated in a fixed order each
//! step: work, sub-delegation, pricing, acceptance. Sub-delegation consumes
//! the work decision and acceptance consumes the freshly set price. The
//! joint Lyapunov policy and every baseline or ablation are just different
//! rule combinations, so an ablated variant differs from the full policy in
//! exactly one component.

pub mod baselines;
pub mod pas;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::types::{DataOwnerState, DoId, StepDecision, TrustNetwork};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("unknown policy name `{0}`")]
    Unknown(String),
}

/// A neighbor that may receive sub-delegated tasks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delegate<T> {
    pub id: DoId,
    pub price: T,
    pub reputation: T,
}

/// What an owner knows about its trust neighborhood when deciding.
#[derive(Debug, Clone, PartialEq)]
pub struct DelegationContext<T> {
    /// Mean posted price over all trusted neighbors; `+inf` with no neighbors.
    pub avg_neighbor_price: T,
    /// Qualifying neighbors, cheapest first, ties by id.
    pub eligible: Vec<Delegate<T>>,
}

impl<T: Scalar> DelegationContext<T> {
    /// Context of an owner with no trusted neighbors.
    pub fn isolated() -> Self {
        Self {
            avg_neighbor_price: T::infinity(),
            eligible: Vec::new(),
        }
    }

    pub fn cheapest_eligible_price(&self) -> Option<T> {
        self.eligible.first().map(|d| d.price)
    }

    pub fn has_eligible(&self) -> bool {
        !self.eligible.is_empty()
    }
}

/// Neighbors of `id` with reputation at least `r_min` and posted price no
/// higher than `reference_payment`, sorted by price then id.
pub fn eligible_delegates<T: Scalar>(
    network: &TrustNetwork,
    id: DoId,
    states: &[DataOwnerState<T>],
    reference_payment: T,
    r_min: T,
) -> Vec<Delegate<T>> {
    let mut out: Vec<Delegate<T>> = network
        .neighbors(id)
        .iter()
        .map(|&k| &states[k.index()])
        .filter(|s| s.reputation >= r_min && s.current_price <= reference_payment)
        .map(|s| Delegate {
            id: s.id,
            price: s.current_price,
            reputation: s.reputation,
        })
        .collect();
    out.sort_by(|a, b| {
        a.price
            .partial_cmp(&b.price)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.id.cmp(&b.id))
    });
    out
}

/// Mean posted price of `id`'s neighbors, `+inf` when it has none.
pub fn avg_neighbor_price<T: Scalar>(network: &TrustNetwork, id: DoId, states: &[DataOwnerState<T>]) -> T {
    let nbrs = network.neighbors(id);
    if nbrs.is_empty() {
        return T::infinity();
    }
    let total = nbrs
        .iter()
        .fold(T::zero(), |acc, k| acc + states[k.index()].current_price);
    total / T::count(nbrs.len() as u64)
}

/// Builds the decision context for `id` against a market snapshot.
/// `reference_payment` is the highest payment among the tasks the owner
/// could hand off; `None` means nothing is transferable.
pub fn build_context<T: Scalar>(
    network: &TrustNetwork,
    id: DoId,
    states: &[DataOwnerState<T>],
    reference_payment: Option<T>,
) -> DelegationContext<T> {
    let r_min = states[id.index()].reputation_threshold;
    DelegationContext {
        avg_neighbor_price: avg_neighbor_price(network, id, states),
        eligible: reference_payment
            .map(|p| eligible_delegates(network, id, states, p, r_min))
            .unwrap_or_default(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PricingRule {
    /// `max(p_min, q / (2 rho r))`.
    Lyapunov,
    /// Uniform on `[p_min, p_cap]`.
    Random,
    /// Random markup above the reserve price.
    AboveMinimum,
    /// Fixed multiple of the reserve price.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AcceptanceRule {
    /// Accept iff `rho p r - q > 0`.
    Lyapunov,
    /// Always accept; the market still enforces the admission cap.
    Always,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubdelegationRule {
    /// Delegate the whole excess iff `rho p_bar - q - Q < 0`.
    Lyapunov,
    Random,
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WorkMode {
    /// Work as much as capacity and backlog allow.
    #[default]
    Greedy,
    /// Work only when the surrogate's work coefficient is negative.
    Threshold,
}

/// Tunables shared by all rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct PolicyParams<T: Scalar> {
    pub reputation_floor: T,
    pub work_mode: WorkMode,
    /// Upper markup fraction for above-minimum pricing.
    pub markup_max: T,
    /// Gain of linear pricing.
    pub lin_gain: T,
    /// Upper end of random pricing as a multiple of `p_min`. `None` selects
    /// `2 (1 + markup_max)`.
    pub rand_cap_multiplier: Option<T>,
}

impl<T: Scalar> Default for PolicyParams<T> {
    fn default() -> Self {
        Self {
            reputation_floor: T::lit(crate::demand::DEFAULT_REPUTATION_FLOOR),
            work_mode: WorkMode::Greedy,
            markup_max: T::one(),
            lin_gain: T::lit(1.5),
            rand_cap_multiplier: None,
        }
    }
}

impl<T: Scalar> PolicyParams<T> {
    pub fn rand_cap(&self, reserve_price: T) -> T {
        let mult = self
            .rand_cap_multiplier
            .unwrap_or_else(|| T::lit(2.0) * (T::one() + self.markup_max));
        reserve_price * mult
    }
}

/// A named combination of rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicySpec {
    pub pricing: PricingRule,
    pub acceptance: AcceptanceRule,
    pub subdelegation: SubdelegationRule,
}

impl PolicySpec {
    pub const PAS_AFL: Self = Self {
        pricing: PricingRule::Lyapunov,
        acceptance: AcceptanceRule::Lyapunov,
        subdelegation: SubdelegationRule::Lyapunov,
    };

    const NAMED: [(&'static str, PricingRule, AcceptanceRule, SubdelegationRule); 12] = {
        use AcceptanceRule as A;
        use PricingRule as P;
        use SubdelegationRule as S;
        [
            ("pas-afl", P::Lyapunov, A::Lyapunov, S::Lyapunov),
            ("rand-rand", P::Random, A::Always, S::Random),
            ("rand-greedy", P::Random, A::Always, S::Greedy),
            ("ampp-rand", P::AboveMinimum, A::Always, S::Random),
            ("ampp-greedy", P::AboveMinimum, A::Always, S::Greedy),
            ("lin-rand", P::Linear, A::Always, S::Random),
            ("lin-greedy", P::Linear, A::Always, S::Greedy),
            ("wo-pricing-r", P::Random, A::Lyapunov, S::Lyapunov),
            ("wo-pricing-a", P::AboveMinimum, A::Lyapunov, S::Lyapunov),
            ("wo-pricing-l", P::Linear, A::Lyapunov, S::Lyapunov),
            ("wo-subdelegation-r", P::Lyapunov, A::Lyapunov, S::Random),
            ("wo-subdelegation-g", P::Lyapunov, A::Lyapunov, S::Greedy),
        ]
    };

    /// The full policy followed by the six baselines.
    pub const COMPARISON: [&'static str; 7] = [
        "pas-afl",
        "rand-rand",
        "rand-greedy",
        "ampp-rand",
        "ampp-greedy",
        "lin-rand",
        "lin-greedy",
    ];

    /// The full policy followed by its five ablations.
    pub const ABLATION: [&'static str; 6] = [
        "pas-afl",
        "wo-pricing-r",
        "wo-pricing-a",
        "wo-pricing-l",
        "wo-subdelegation-r",
        "wo-subdelegation-g",
    ];

    pub fn by_name(name: &str) -> Result<Self, PolicyError> {
        Self::NAMED
            .iter()
            .find(|(n, ..)| *n == name)
            .map(|&(_, pricing, acceptance, subdelegation)| Self {
                pricing,
                acceptance,
                subdelegation,
            })
            .ok_or_else(|| PolicyError::Unknown(name.to_owned()))
    }

    /// Canonical name, if this combination has one.
    pub fn name(&self) -> Option<&'static str> {
        Self::NAMED
            .iter()
            .find(|(_, p, a, s)| *p == self.pricing && *a == self.acceptance && *s == self.subdelegation)
            .map(|(n, ..)| *n)
    }

    /// Number of rule slots in which two policies differ.
    pub fn components_differing(&self, other: &Self) -> usize {
        usize::from(self.pricing != other.pricing)
            + usize::from(self.acceptance != other.acceptance)
            + usize::from(self.subdelegation != other.subdelegation)
    }
}

impl FromStr for PolicySpec {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::by_name(s)
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.name() {
            Some(n) => f.write_str(n),
            None => write!(f, "{:?}/{:?}/{:?}", self.pricing, self.acceptance, self.subdelegation),
        }
    }
}

/// A decision plus diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decided<T> {
    pub decision: StepDecision<T>,
    /// The Lyapunov price fell back to the reserve because availability or
    /// reputation made the quotient unbounded.
    pub price_degenerate: bool,
}

/// Evaluates `spec` for one owner: work, then sub-delegation, then price,
/// then acceptance.
pub fn decide<T: Scalar, R: Rng + ?Sized>(
    spec: &PolicySpec,
    state: &DataOwnerState<T>,
    ctx: &DelegationContext<T>,
    params: &PolicyParams<T>,
    rng: &mut R,
) -> Decided<T> {
    let work = pas::decide_work(state, params.work_mode);
    let subdelegate = match spec.subdelegation {
        SubdelegationRule::Lyapunov => pas::decide_subdelegation(state, ctx, work),
        SubdelegationRule::Random => baselines::subdel_rand(state, ctx, work, rng),
        SubdelegationRule::Greedy => baselines::subdel_greedy(state, ctx, work),
    };
    let (price, price_degenerate) = match spec.pricing {
        PricingRule::Lyapunov => {
            let p = pas::decide_price(state, params.reputation_floor);
            (p.price, p.degenerate)
        }
        PricingRule::Random => (baselines::price_rand(state, params, rng), false),
        PricingRule::AboveMinimum => (baselines::price_ampp(state, params, rng), false),
        PricingRule::Linear => (baselines::price_lin(state, params), false),
    };
    let accept = match spec.acceptance {
        AcceptanceRule::Lyapunov => pas::decide_acceptance(state, price),
        AcceptanceRule::Always => true,
    };
    Decided {
        decision: StepDecision {
            accept,
            price,
            subdelegate,
            work,
        },
        price_degenerate,
    }
}
