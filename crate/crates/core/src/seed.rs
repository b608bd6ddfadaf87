//! Seed derivation.
//!
//! Every random stream in a run is derived from the single master seed as
//! `derive_seed(master, stream, index)`, where `stream` names the consumer
//! and `index` is the episode or update counter that owns the draw. The
//! derivation is a pair of SplitMix64 finalisers and never changes between
//! releases, so equal configs give equal outputs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    /// Network weight initialisation (index 0).
    Init = 1,
    /// Spawn pose of episode `index`.
    Spawn = 2,
    /// Action sampling during rollout `index`.
    Action = 3,
    /// Minibatch shuffling during update `index`.
    Shuffle = 4,
    /// Depth noise; indexed by step within an episode.
    Noise = 5,
    /// Evaluation baselines that draw random actions.
    Baseline = 6,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, stream: Stream, index: u64) -> u64 {
    splitmix(splitmix(master ^ splitmix(stream as u64)) ^ index)
}

pub fn rng_for(master: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stream, index))
}
