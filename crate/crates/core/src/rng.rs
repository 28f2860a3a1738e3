//! Seeded random streams.
//!
//! Every stochastic routine takes a [`StreamRng`] built from a 64-bit seed.
//! Multi-run experiments derive one child seed per run index with
//! [`child_seed`], so any single run can be replayed in isolation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout: ChaCha with 8 rounds.
pub type StreamRng = ChaCha8Rng;

pub fn stream(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer. A bijection on `u64`.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of run `index` under a base seed.
///
/// `base + (index + 1) * GOLDEN_GAMMA` is injective in `index` (the gamma is
/// odd) and `mix64` is a bijection, so child seeds never collide within a
/// base seed.
pub fn child_seed(base: u64, index: u64) -> u64 {
    mix64(base.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}
