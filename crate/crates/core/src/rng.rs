//! Seeded random streams.
//!
//! Every stochastic computation is keyed by an explicit 64-bit seed. Parallel
//! work derives one stream per sample index with [`substream`], so results do
//! not depend on how samples are distributed over threads.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

/// Generator used throughout the crate: xoshiro256++, period 2^256 - 1.
pub type Rng = Xoshiro256PlusPlus;

pub fn rng_from_seed(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the `index`-th child stream of `base`.
#[inline]
pub fn derive_seed(base: u64, index: u64) -> u64 {
    mix64(base ^ mix64(index.wrapping_add(0x632b_e59b_d9b4_e019)))
}

pub fn substream(base: u64, index: u64) -> Rng {
    rng_from_seed(derive_seed(base, index))
}
