//! Deterministic random streams.
//!
//! Every stochastic stage draws from a ChaCha8 generator whose seed is derived
//! from a master seed and a tuple of tags (stage, replication index,
//! alternative). Derived streams do not depend on scheduling, so results are
//! identical for any number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `tags` into `master` to obtain an independent 64-bit seed.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(master), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

pub fn stream(master: u64, tags: &[u64]) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, tags))
}

/// Stage tags keep the fitting and evaluation replications disjoint.
pub mod stage {
    pub const EVALUATION: u64 = 1;
    pub const VFA_FIT: u64 = 2;
    pub const FROZEN_SET: u64 = 3;
    pub const SA_RESAMPLE: u64 = 4;
}

/// The streams owned by one macro replication: one for the ground truth and
/// one per alternative for its observation sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplicationStream {
    pub master_seed: u64,
    pub stage: u64,
    pub index: u64,
}

impl ReplicationStream {
    pub fn new(master_seed: u64, stage: u64, index: u64) -> Self {
        Self {
            master_seed,
            stage,
            index,
        }
    }

    pub fn truth_rng(&self) -> StreamRng {
        stream(self.master_seed, &[self.stage, self.index, 0])
    }

    /// Observation stream of alternative `alt`; the `n`-th sample an
    /// alternative receives is the same whichever policy requests it.
    pub fn observation_rng(&self, alt: usize) -> StreamRng {
        stream(self.master_seed, &[self.stage, self.index, 1 + alt as u64])
    }
}
