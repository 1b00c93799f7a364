//! Seeded random streams.
//!
//! One scenario seed fans out into independent named substreams so that, for
//! example, swapping the scheduler (which changes how many latency samples are
//! drawn) leaves the generated workload untouched.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Substream used for vehicle arrivals, residencies and capacities.
pub const VEHICLES: &str = "workload.vehicles";
/// Substream used for user arrivals, sessions and demands.
pub const USERS: &str = "workload.users";
/// Substream used for per-message latency jitter.
pub const LATENCY: &str = "latency";
/// Substream reserved for scheduler tie-breaking.
pub const SCHEDULING: &str = "scheduling";

#[derive(Debug, Clone, Copy)]
pub struct RngStreams {
    seed: u64,
}

impl RngStreams {
    pub fn new(seed: u64) -> Self {
        RngStreams { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Deterministic generator for the named substream.
    pub fn stream(&self, name: &str) -> SimRng {
        ChaCha8Rng::seed_from_u64(splitmix64(self.seed ^ fnv1a(name.as_bytes())))
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
