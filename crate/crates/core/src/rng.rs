//! Deterministic random streams.
//!
//! Every Monte-Carlo draw in the crate comes from a [`SeedTree`]: a root seed
//! plus a path of integers (band index, trial index, SU index, ...) names an
//! independent ChaCha8 stream. Two draws with the same path are bit-identical,
//! and the order in which trials are evaluated never changes any result.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream type used throughout the crate.
pub type SimRng = ChaCha8Rng;

/// Path labels used to keep unrelated substreams apart.
pub mod tag {
    pub const NOISE: u64 = 1;
    pub const SIGNAL: u64 = 2;
    pub const OCCUPANCY: u64 = 3;
    pub const TEMPLATE: u64 = 4;
    pub const TRIAL_H0: u64 = 5;
    pub const TRIAL_H1: u64 = 6;
    pub const MEASUREMENT: u64 = 7;
    pub const SCENE: u64 = 8;
    pub const CALIBRATION: u64 = 9;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedTree {
    root: u64,
}

impl SeedTree {
    pub fn new(root: u64) -> Self {
        Self { root }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    /// A child tree whose root is derived from `path`.
    pub fn child(&self, path: &[u64]) -> SeedTree {
        SeedTree {
            root: fold_path(self.root, path),
        }
    }

    /// Independent stream addressed by `path`.
    pub fn stream(&self, path: &[u64]) -> SimRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.root);
        rng.set_stream(fold_path(0x6a09_e667_f3bc_c908, path));
        rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fold_path(start: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(start), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}
