//! Seed derivation. Every stochastic draw in a trial comes from a generator
//! keyed by (trial seed, stream, index), so subsystems never share a stream
//! and results do not depend on execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Independent named streams inside one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Laser = 1,
    Filter = 2,
    FilterInit = 3,
    Head = 4,
    Response = 5,
    Gaze = 6,
    Placement = 7,
    Trial = 8,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with any number of integer tags.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(splitmix64(base), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

pub fn stream_seed(base: u64, stream: Stream, index: u64) -> u64 {
    derive_seed(base, &[stream as u64, index])
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream_rng(base: u64, stream: Stream, index: u64) -> SimRng {
    rng_from_seed(stream_seed(base, stream, index))
}
