//! Seed derivation for reproducible parallel work.
//!
//! Every independent task (bootstrap replicate, simulation run, grid point)
//! receives a seed computed from the master seed and its own coordinates, so
//! results do not depend on scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Default master seed used by the command-line tool.
pub const DEFAULT_SEED: u64 = 20_230_601;

pub(crate) mod stream {
    pub const BOOTSTRAP: u64 = 0x62_6f_6f_74;
    pub const XMIN: u64 = 0x78_6d_69_6e;
    pub const CALIBRATION_RUN: u64 = 0x63_61_6c_69;
    pub const THEORY: u64 = 0x74_68_65_6f;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `(master, stream, index)` into a child seed.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ stream) ^ index)
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}
