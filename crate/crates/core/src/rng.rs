//! Counter-based random-stream derivation.
//!
//! Every Monte-Carlo work unit gets its own ChaCha stream keyed by the
//! master seed and a path of indices (sweep point, trial, scheme lane).
//! Trials are therefore exchangeable: results do not depend on execution
//! order or degree of parallelism.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Collapse (master, path...) into one well-mixed 64-bit key.
pub fn derive_key(master: u64, path: &[u64]) -> u64 {
    let mut h = mix(master ^ GOLDEN);
    for &p in path {
        h = mix(h.wrapping_add(GOLDEN).wrapping_add(p));
    }
    h
}

/// Independent stream for the given derivation path.
pub fn substream(master: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_key(master, path))
}
