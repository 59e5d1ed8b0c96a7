//! Seeded random streams.
//!
//! Every stochastic routine draws from [`Rng`], the ChaCha stream cipher
//! reduced to 8 rounds (`rand_chacha::ChaCha8Rng`). A `u64` seed is expanded
//! to the 256-bit key with PCG32 as documented by `rand_core`'s
//! `seed_from_u64`. The output stream is platform independent, so identical
//! seeds give identical datasets everywhere.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as Rng;

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from a base seed and a path of labels,
/// e.g. `(seed, split, index)`.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix64(base), |acc, &p| mix64(acc ^ mix64(p)))
}
