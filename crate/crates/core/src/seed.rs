//! Seed derivation.
//!
//! A child seed is `splitmix64(root ^ fnv1a64(stage) ^ splitmix64(index))`.
//! The same `(root, stage, index)` triple always yields the same stream, no
//! matter which thread or in which order it is requested.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StageRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a64(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

pub fn derive_seed(root: u64, stage: &str, index: u64) -> u64 {
    splitmix64(root ^ fnv1a64(stage) ^ splitmix64(index))
}

pub fn rng_from_seed(seed: u64) -> StageRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stage_rng(root: u64, stage: &str, index: u64) -> StageRng {
    rng_from_seed(derive_seed(root, stage, index))
}
