//! Named random sub-streams derived from one seed.
//!
//! Every consumer draws from its own ChaCha stream, selected by name (and an
//! optional index), so adding a vehicle or a request kind does not shift the
//! numbers any other consumer sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Streams {
    seed: u64,
}

// FNV-1a, stable across platforms and releases.
fn fnv1a(bytes: &[u8], mut h: u64) -> u64 {
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;

impl Streams {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self, name: &str) -> SimRng {
        self.indexed(name, 0)
    }

    pub fn indexed(&self, name: &str, index: u64) -> SimRng {
        let id = fnv1a(&index.to_le_bytes(), fnv1a(name.as_bytes(), FNV_OFFSET));
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(id);
        rng
    }
}
