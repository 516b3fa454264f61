//! Seed derivation.
//!
//! Every random stream in a run is a `ChaCha8Rng` seeded from the run seed
//! and a stream tag, so adding a new consumer never shifts an existing one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combines a base seed with a sequence of tags into a new seed.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(mix64(base), |acc, &t| mix64(acc ^ mix64(t)))
}

pub fn stream(base: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, tags))
}

/// Stream tags used by the agents and harness.
pub mod tag {
    pub const INIT: u64 = 1;
    pub const REPLAY: u64 = 2;
    pub const ACTION: u64 = 3;
    pub const MEMBER: u64 = 4;
    pub const ENV: u64 = 5;
    pub const EVAL_ENV: u64 = 6;
    pub const PROBE: u64 = 7;
    pub const DATA: u64 = 8;
}
