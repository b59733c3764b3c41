//! Deterministic random streams.
//!
//! Every stream is a ChaCha8 generator keyed by a master seed and selected by
//! a 64-bit stream id, so episode `i` draws the same numbers no matter which
//! worker runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Lanes separate independent consumers within one episode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lane {
    /// Hypothesis draw and path increments.
    Path = 0,
    /// Randomness consumed by the policy itself.
    Policy = 1,
}

pub fn stream(master_seed: u64, index: u64, lane: Lane) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index.wrapping_mul(2).wrapping_add(lane as u64));
    rng
}

pub fn seeded(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}
