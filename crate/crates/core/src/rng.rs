//! Seeded random sources.
//!
//! Every stochastic component takes an explicit [`SimRng`]. Per-cell draws
//! inside a propagation step are counter-based: the step pulls one 64-bit key
//! from its generator and each cell hashes `(key, cell index)` into a uniform
//! variate. Two grids advanced with the same key therefore see identical
//! per-cell randomness wherever their states agree, independent of the order
//! in which cells are visited.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Independent generator for a named sub-stream of a run seed.
pub fn stream(seed: u64, stream_id: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Derives a child seed from a parent seed and an index.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

pub fn next_key(rng: &mut SimRng) -> u64 {
    rng.next_u64()
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform variate in `[0, 1)` for cell `index` under step key `key`.
#[inline]
pub fn cell_uniform(key: u64, index: usize) -> f64 {
    let h = splitmix64(key ^ (index as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93));
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
