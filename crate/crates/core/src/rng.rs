//! Seed derivation and deterministic noise streams.
//!
//! Every randomized operation in the crate takes an explicit `u64` seed and
//! turns it into one or more ChaCha8 streams. Per-sample streams are derived
//! from `(seed, sample index)` so sweeps can be reordered or parallelized
//! without changing results.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::scalar::{real, Scalar};

/// Mixes a salt into a base seed (splitmix64 finalizer).
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// RNG for the whole operation identified by `seed`.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent per-sample stream derived from `(seed, index)`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws `len` standard-normal values.
pub fn standard_normal_vec<T: Scalar>(rng: &mut ChaCha8Rng, len: usize) -> Vec<T> {
    (0..len)
        .map(|_| real(<StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)))
        .collect()
}

/// Draws a uniform value in `[-a, a)`.
pub fn uniform_symmetric<T: Scalar>(rng: &mut ChaCha8Rng, a: f64) -> T {
    let u: f64 = rng.random();
    real(a * (2.0 * u - 1.0))
}
