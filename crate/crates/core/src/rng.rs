//! Seed derivation for reproducible parallel replication.
//!
//! Every replication gets its own generator seeded from a mix of the study
//! seed and the replication's coordinates, so results do not depend on
//! scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Incremental, platform-stable seed mixer.
#[derive(Debug, Clone, Copy)]
pub struct SeedMixer(u64);

impl SeedMixer {
    pub fn new(base: u64) -> Self {
        SeedMixer(splitmix64(base))
    }

    pub fn u64(self, v: u64) -> Self {
        SeedMixer(splitmix64(self.0 ^ splitmix64(v)))
    }

    pub fn f64(self, v: f64) -> Self {
        self.u64(v.to_bits())
    }

    pub fn str(self, s: &str) -> Self {
        // FNV-1a
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in s.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01B3);
        }
        self.u64(h)
    }

    pub fn finish(self) -> u64 {
        self.0
    }
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Seed of replication `index` in a stream rooted at `base`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    SeedMixer::new(base).u64(index).finish()
}
