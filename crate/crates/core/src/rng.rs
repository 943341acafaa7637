//! Deterministic random streams.
//!
//! Every stream is a SplitMix64 generator (Steele, Lea & Flood; increment
//! `0x9e3779b97f4a7c15`, finalizer multipliers `0xbf58476d1ce4e5b9` and
//! `0x94d049bb133111eb`). Uniform doubles take the top 53 bits of each output.
//! Substream seeds are derived by folding each index into the seed through one
//! generator step, so results reproduce bit-for-bit on every platform.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

pub struct Stream {
    inner: SplitMix64,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Stream { inner: SplitMix64::seed_from_u64(seed) }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `0..n`; `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }
}

/// Folds `parts` into `seed`, one SplitMix64 step per part.
pub fn mix_seed(seed: u64, parts: &[u64]) -> u64 {
    let mut state = seed;
    for &part in parts {
        let mut g = SplitMix64::seed_from_u64(state ^ part.wrapping_mul(0x9e3779b97f4a7c15));
        state = g.next_u64();
    }
    state
}
