//! Seed derivation.
//!
//! Every random stream in the crate is a `ChaCha8Rng` seeded from a 64-bit
//! value. Sub-streams are derived with [`derive`], which mixes the parent seed
//! and a stream index through one round of splitmix64:
//!
//! ```text
//! derive(master, i) = splitmix64(master + (i + 1) * 0x9E3779B97F4A7C15)
//! ```
//!
//! There is no global RNG.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for sub-stream `index` of `master`.
pub fn derive(master: u64, index: u64) -> u64 {
    splitmix64(master.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Named sub-streams, so that e.g. the traffic trace of a simulation does not
/// shift when the agent strategy draws a different number of samples.
pub mod stream {
    pub const GRAPH: u64 = 1;
    pub const HUBS: u64 = 2;
    pub const DESTINATIONS: u64 = 3;
    pub const RANDOM_PEERS: u64 = 4;
    pub const PERI: u64 = 5;
    pub const TRAFFIC: u64 = 6;
    pub const CHURN: u64 = 7;
    pub const AGENT: u64 = 8;
    pub const LINKS: u64 = 9;
    pub const FORWARDING: u64 = 10;
}
