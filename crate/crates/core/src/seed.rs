//! Seeding conventions.
//!
//! Every random stream in the crate is a `ChaCha8Rng` (rand_chacha 0.3)
//! seeded with `seed_from_u64`. Sub-seeds are derived from a parent seed, a
//! stream tag and an index with the SplitMix64 finalizer so that one
//! top-level seed reproduces a whole pipeline run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags used for sub-seed derivation.
pub mod stream {
    pub const PAYLOAD: u64 = 1;
    pub const SYNTH: u64 = 2;
    pub const SPLIT: u64 = 3;
    pub const FOLDS: u64 = 4;
    pub const GA: u64 = 5;
    pub const CALIBRATION: u64 = 6;
}

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `splitmix64(splitmix64(parent ^ tag * K) + index)`.
pub fn derive(parent: u64, tag: u64, index: u64) -> u64 {
    let a = splitmix64(parent ^ tag.wrapping_mul(0xD6E8_FEB8_6659_FD93));
    splitmix64(a.wrapping_add(index))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
