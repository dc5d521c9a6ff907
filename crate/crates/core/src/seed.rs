//! Deterministic seed splitting.
//!
//! Every random choice in a run is drawn from a `ChaCha8Rng` whose seed is
//! derived from the run seed by [`Seed::derive`]. The derivation mixes the
//! parent seed, a short tag naming the consumer and a counter through
//! SplitMix64, so two consumers with different tags or counters never share
//! a stream and the result does not depend on execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Seed(pub u64);

const fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

impl Seed {
    /// Child seed for `(self, tag, counter)`.
    pub fn derive(self, tag: &str, counter: u64) -> Seed {
        let a = splitmix64(self.0 ^ fnv1a64(tag.as_bytes()).rotate_left(23));
        Seed(splitmix64(a ^ splitmix64(counter ^ 0xA076_1D64_78BD_642F)))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

impl From<u64> for Seed {
    fn from(v: u64) -> Self {
        Seed(v)
    }
}
