//! Seeded random streams.
//!
//! Every stochastic component draws from [`Stream`], a ChaCha20 generator
//! (`rand_chacha::ChaCha20Rng`) seeded through `SeedableRng::seed_from_u64`.
//! ChaCha output is specified independently of platform and endianness, so a
//! given seed reproduces the same sample sequence everywhere.
//!
//! Parallel users never share a stream. A worker that handles point `i` of a
//! grid derives its own seed with [`derive_seed`] and builds a fresh stream.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type Stream = ChaCha20Rng;

pub fn stream(seed: u64) -> Stream {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Deterministic sub-seed for `(seed, stream_id)`, mixed with SplitMix64.
pub fn derive_seed(seed: u64, stream_id: u64) -> u64 {
    let mut z = seed ^ stream_id.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
