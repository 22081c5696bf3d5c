//! Decision support for data owners in an auction-based federated learning
//! market, plus the discrete-time market the decisions are evaluated in.
//!
//! The crate is layered bottom-up:
//!
//! * [`types`]: shared domain records (owner state, tasks, trust graph, decisions).
//! * [`demand`]: expected task demand as a function of price and reputation.
//! * [`queues`]: pending/urgency virtual queues, Lyapunov drift bound, costs,
//!   utility and the drift-plus-penalty objective.
//! * [`policy`]: the joint pricing / acceptance / sub-delegation policy and the
//!   baseline strategies it is compared against.
//! * [`market`]: trust-network generation, model-user bidders, posted-price
//!   clearing, sub-delegation routing, reputation dynamics and the step loop.
//!
//! The math layers are generic over [`Scalar`]; the aliases below fix the
//! concrete type the market engine runs on.

pub mod demand;
pub mod market;
pub mod policy;
pub mod queues;
pub mod rng;
pub mod scalar;
pub mod types;

pub use scalar::Scalar;

/// Scalar type used by the market engine and the experiment tooling.
pub type Real = f64;

pub type Constants = types::MarketConstants<Real>;
pub type OwnerState = types::DataOwnerState<Real>;
pub type Decision = types::StepDecision<Real>;
pub type FlTask = types::Task<Real>;
pub type Record = types::MetricsRecord<Real>;
pub type DriftBound = queues::DriftBoundParts<Real>;
pub type Context = policy::DelegationContext<Real>;

pub use types::{DoId, MuId, TaskId, TrustNetwork};
