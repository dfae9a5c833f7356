//! Seeding.
//!
//! Every random stream in the crate is a `Xoshiro256PlusPlus` generator
//! seeded through `SeedableRng::seed_from_u64` (SplitMix64 expansion).
//! Independent streams for cells, replications and Step-A vectors are keyed
//! by mixing the master seed with a path of integer labels, so any subset of
//! the work can be recomputed in any order with identical results.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

/// The generator used throughout the crate.
pub type StreamRng = Xoshiro256PlusPlus;

/// A 64-bit seed. Identical seeds give identical streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    /// Seed of the sub-stream addressed by `path`.
    pub fn derive(self, path: &[u64]) -> RngSeed {
        let mut h = splitmix(self.0 ^ 0x6A09_E667_F3BC_C908);
        for &label in path {
            h = splitmix(h ^ splitmix(label.wrapping_add(0x9E37_79B9_7F4A_7C15)));
        }
        RngSeed(h)
    }

    pub fn rng(self) -> StreamRng {
        StreamRng::seed_from_u64(self.0)
    }
}

impl From<u64> for RngSeed {
    fn from(v: u64) -> Self {
        RngSeed(v)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit label for a string, for use in [`RngSeed::derive`] paths.
pub fn label(name: &str) -> u64 {
    // FNV-1a
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
