//! The market the owners act in: trust network, model-user bidders,
//! posted-price clearing, sub-delegation routing, reputation dynamics and
//! the step loop.

pub mod bidders;
pub mod config;
pub mod network;
pub mod reputation;
pub mod routing;
pub mod world;

pub use bidders::{run_auction, AuctionOutcome, BidderParams, ModelUser, MuStrategy};
pub use config::{AvailabilitySchedule, ConfigError, IntRange, MarketConfig, Range};
pub use network::generate_trust_network;
pub use reputation::{update_reputation, ReputationParams};
pub use routing::{route_subdelegations, Transfer};
pub use world::{AuditReport, Ledger, StepReport, World};
