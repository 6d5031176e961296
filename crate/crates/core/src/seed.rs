//! Deterministic seed splitting.
//!
//! Every random stream in the crate is derived from one job seed through
//! [`derive`]: `derive(job, stream, index)` mixes the three words with the
//! SplitMix64 finalizer, so member `index` of stream `stream` always sees the
//! same generator regardless of thread count or evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream identifiers used by the crate. Fixed values; changing one changes outputs.
pub mod stream {
    pub const SGC: u64 = 1;
    pub const MBI: u64 = 2;
    pub const ENSEMBLE_FIT: u64 = 3;
    pub const ENSEMBLE_HOLDOUT: u64 = 4;
    pub const BAND: u64 = 5;
    pub const AXIOMS: u64 = 6;
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive(job: u64, stream: u64, index: u64) -> u64 {
    splitmix(splitmix(splitmix(job) ^ stream.rotate_left(17)) ^ index)
}

pub fn rng(job: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(job, stream, index))
}
