//! Keyed random streams.
//!
//! Every random draw in a run comes from a stream keyed by
//! `(seed, purpose, a, b)`, typically `(owner, step)`. Two runs that share a
//! seed therefore see identical exogenous randomness (availability, demand,
//! bidder draws) no matter which policy the owners use or in which order the
//! owners are evaluated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// What a stream is used for. Distinct purposes never share draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Network = 1,
    Profiles = 2,
    Bidders = 3,
    Availability = 4,
    Demand = 5,
    Policy = 6,
    ClearingOrder = 7,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic stream for `(seed, purpose, a, b)`.
pub fn stream(seed: u64, purpose: Purpose, a: u64, b: u64) -> StreamRng {
    let mut h = splitmix64(seed);
    h = splitmix64(h ^ purpose as u64);
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ b.rotate_left(17));
    ChaCha8Rng::seed_from_u64(h)
}
