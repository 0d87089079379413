//! Deterministic random streams.
//!
//! Every consumer of randomness (mask generation, generator noise, hints,
//! parameter init, minibatch selection) draws from its own ChaCha stream so
//! that changing how often one consumer draws never perturbs the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The PRNG used throughout the crate.
pub type Stream = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamKind {
    Mask,
    Noise,
    Hint,
    Init,
    Batch,
}

impl StreamKind {
    fn salt(self) -> u64 {
        match self {
            StreamKind::Mask => 0x6d61_736b,
            StreamKind::Noise => 0x6e6f_6973,
            StreamKind::Hint => 0x6869_6e74,
            StreamKind::Init => 0x696e_6974,
            StreamKind::Batch => 0x6261_7463,
        }
    }
}

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a path of indices,
/// e.g. `derive_seed(master, &[trial])` or `derive_seed(trial_seed, &[candidate])`.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(seed), |acc, &p| {
        splitmix64(acc ^ splitmix64(p.wrapping_add(1)))
    })
}

/// A single stream of the given kind for `seed`.
pub fn stream(seed: u64, kind: StreamKind) -> Stream {
    Stream::seed_from_u64(derive_seed(seed, &[kind.salt()]))
}

/// The full set of independent streams derived from one master seed.
#[derive(Debug, Clone)]
pub struct RngStreams {
    pub mask: Stream,
    pub noise: Stream,
    pub hint: Stream,
    pub init: Stream,
    pub batch: Stream,
}

impl RngStreams {
    pub fn new(seed: u64) -> Self {
        Self {
            mask: stream(seed, StreamKind::Mask),
            noise: stream(seed, StreamKind::Noise),
            hint: stream(seed, StreamKind::Hint),
            init: stream(seed, StreamKind::Init),
            batch: stream(seed, StreamKind::Batch),
        }
    }
}
