//! Reproducible seed streams.
//!
//! Every stochastic operation in this crate takes an explicit RNG, and all
//! drivers derive their RNGs from a single master seed plus a path of
//! indices (experiment, cell, trial, ...). The derivation is a SplitMix64
//! chain feeding a ChaCha key, so streams are independent, reproducible,
//! and identical across platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

#[inline]
fn splitmix64_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent RNG from a master seed and a stream path.
///
/// Identical `(seed, path)` pairs always produce identical streams;
/// distinct paths produce statistically independent streams.
pub fn stream(seed: u64, path: &[u64]) -> ChaCha12Rng {
    let mut state = splitmix64_mix(seed ^ 0x9E37_79B9_7F4A_7C15);
    for &p in path {
        state = splitmix64_mix(state ^ splitmix64_mix(p.wrapping_add(0xA076_1D64_78BD_642F)));
    }
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        chunk.copy_from_slice(&splitmix64_mix(state).to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}
