//! Reproducible random streams.
//!
//! Every (seed, chain, index) triple maps to its own ChaCha8 stream, so parallel Monte Carlo
//! gives identical results for any scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type StreamRng = ChaCha8Rng;

/// Independent stream for `(seed, chain, index)`.
pub fn stream(seed: u64, chain: u64, index: u64) -> StreamRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&chain.to_le_bytes());
    key[16..24].copy_from_slice(&index.to_le_bytes());
    key[24..].copy_from_slice(b"rbgrf\0\0\0");
    ChaCha8Rng::from_seed(key)
}

pub fn normals<R: rand::Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}
