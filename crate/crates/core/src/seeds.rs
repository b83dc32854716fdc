//! Portable seed expansion.
//!
//! Every random stream in the crate is a `ChaCha8Rng` keyed by a 64-bit value
//! taken from the SplitMix64 sequence of a master seed: the k-th stream of
//! master seed `m` uses the k-th output of SplitMix64 started at state `m`.
//! Any implementation with SplitMix64 and ChaCha8 can reproduce the streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The `stream`-th SplitMix64 output for `master`, counting from 0.
pub fn derive(master: u64, stream: u64) -> u64 {
    splitmix64(master.wrapping_add(GOLDEN_GAMMA.wrapping_mul(stream + 1)))
}

pub fn stream_rng(master: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, stream))
}
