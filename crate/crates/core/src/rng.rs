//! Seed derivation.
//!
//! Every stochastic component draws from a ChaCha8 stream selected by a
//! `(seed, stream)` pair, so independent consumers never share state and
//! results do not depend on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream ids reserved by the simulator.
pub mod streams {
    pub const CELLS: u64 = 0;
    pub const POWER_UP: u64 = 1;
    pub const PATTERN: u64 = 2;
    pub const KEYGEN: u64 = 3;
    pub const CHALLENGE: u64 = 4;
    pub const NOISE: u64 = 5;
    pub const RESPONDER: u64 = 6;
    pub const MIDPOINT: u64 = 7;
    /// First stream handed out to per-trial substreams.
    pub const TRIAL_BASE: u64 = 1 << 32;
}

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer applied to `seed + index`; used to fan a global seed
/// out into per-tag seeds.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
