//! Deterministic, splittable random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream keyed by a
//! root seed plus a path of context words (epoch, batch, sample, draw).
//! Streams for different paths are independent, so parallel generation
//! yields the same result no matter how work is scheduled.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 step; good avalanche, cheap, stable across platforms.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// A ChaCha8 generator keyed by `(seed, path...)`.
pub fn stream(seed: u64, path: &[u64]) -> ChaCha8Rng {
    let mut state = mix(seed ^ 0x6a09e667f3bcc908);
    for &word in path {
        state = mix(state ^ mix(word));
    }
    let mut key = [0u8; 32];
    let mut word = state;
    for chunk in key.chunks_exact_mut(8) {
        word = mix(word);
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
