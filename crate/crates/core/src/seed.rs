//! Deterministic seed derivation.
//!
//! Replica `i` of a command tagged `tag` under master seed `m` draws from
//! `ChaCha8Rng::seed_from_u64(derive(m, tag_hash(tag), i))`, where `derive`
//! chains three SplitMix64 finalisations:
//!
//! ```text
//! derive(m, t, i) = mix(mix(mix(m) ^ t) ^ i)
//! ```
//!
//! Each `mix` is a bijection on `u64`, so for fixed `(m, t)` distinct replica
//! indices always receive distinct seeds.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finaliser (a bijection).
#[inline]
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a hash of a command tag.
pub fn tag_hash(tag: &str) -> u64 {
    tag.bytes().fold(0xCBF2_9CE4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01B3))
}

#[inline]
pub fn derive(master: u64, tag: u64, index: u64) -> u64 {
    mix(mix(mix(master) ^ tag) ^ index)
}

/// Seed source for one command: hands out per-replica generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStream {
    pub master: u64,
    pub tag: u64,
}

impl SeedStream {
    pub fn new(master: u64, tag: &str) -> Self {
        SeedStream { master, tag: tag_hash(tag) }
    }

    pub fn seed(&self, index: u64) -> u64 {
        derive(self.master, self.tag, index)
    }

    pub fn rng(&self, index: u64) -> SimRng {
        SimRng::seed_from_u64(self.seed(index))
    }

    /// Stream for a nested purpose, e.g. one grid point of a sweep.
    pub fn substream(&self, label: u64) -> SeedStream {
        SeedStream { master: self.seed(label), tag: self.tag }
    }
}
