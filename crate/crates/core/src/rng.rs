//! Deterministic random streams.
//!
//! Every stochastic computation draws from a ChaCha8 stream keyed by
//! (seed, label, replicate). Streams are independent of execution order and
//! worker count, so results depend only on the seed and the inputs.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const STREAM_TAG: u64 = 0x706f_7374_7265_7631; // "postrev1"

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Independent substream for (seed, label, replicate). Labels are typically
/// asset ids.
pub fn substream(seed: u64, label: &str, replicate: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&fnv1a64(label.as_bytes()).to_le_bytes());
    key[16..24].copy_from_slice(&replicate.to_le_bytes());
    key[24..32].copy_from_slice(&STREAM_TAG.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Uniform draw in [0, 1) with 53-bit resolution.
pub fn uniform01<R: RngCore>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
}
