//! Deterministic random streams. Every sampling site receives an explicit
//! stream; nothing reads ambient OS entropy, so a run is a pure function
//! of its seed. Streams split by drawing a child seed from the parent,
//! which keeps per-agent and per-worker randomness independent of how
//! often the other streams are consumed.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The one RNG used across the crate.
pub type Stream = ChaCha8Rng;

pub fn stream(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive an independent child stream, advancing the parent.
pub fn split(parent: &mut Stream) -> Stream {
    let mut seed = [0u8; 32];
    parent.fill_bytes(&mut seed);
    ChaCha8Rng::from_seed(seed)
}

/// Stable per-purpose substream: hash a label into the seed so adding a
/// new consumer never shifts the draws of existing ones.
pub fn substream(seed: u64, label: &str) -> Stream {
    // FNV-1a over the label, folded into the seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    stream(seed ^ h)
}

/// Sample an index from a probability vector. The probabilities are
/// assumed to sum to one; any shortfall from rounding goes to the last
/// index.
pub fn categorical(probs: &[f64], rng: &mut Stream) -> usize {
    assert!(!probs.is_empty());
    let r: f64 = rand::Rng::gen(rng);
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if r < acc {
            return i;
        }
    }
    probs.len() - 1
}
