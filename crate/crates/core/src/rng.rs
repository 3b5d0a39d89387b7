//! Seed derivation. Every random stream in the crate is a `ChaCha8Rng`
//! seeded from a master seed and a stream path, so results do not depend on
//! the order in which independent work items are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `seed` and a path of stream identifiers.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn rng_from(seed: u64, path: &[u64]) -> Rng {
    Rng::seed_from_u64(derive_seed(seed, path))
}

/// Stream identifiers used across the crate.
pub mod stream {
    pub const GENERATE: u64 = 1;
    pub const OBSERVE: u64 = 2;
    pub const SPLIT: u64 = 3;
    pub const OPTIMIZE: u64 = 4;
    pub const TRIAL: u64 = 5;
    pub const PLOT: u64 = 6;
}
