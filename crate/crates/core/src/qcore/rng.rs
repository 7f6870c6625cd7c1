//! Deterministic named random streams.
//!
//! Every stochastic component draws from its own stream derived from the
//! run seed plus a textual label (receiver choices, measurement sampling,
//! check-position selection, ...). Streams are independent, so adding
//! draws to one component never perturbs the sequence seen by another,
//! and a `(seed, label)` pair replays identically across runs.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// 64-bit FNV-1a hash of the label; stable across platforms and builds.
fn label_hash(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// A ChaCha stream keyed by `(seed, label)`.
pub fn named_stream(seed: u64, label: &str) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(label_hash(label));
    rng
}
