//! Seeded, splittable randomness.
//!
//! [`SeededRng`] wraps a ChaCha12 stream cipher generator. A child stream is
//! created by [`SeededRng::split`], which consumes 32 bytes from the parent
//! and uses them as the child's key. The child therefore depends only on the
//! parent state at the moment of splitting, and later draws from the parent
//! do not affect it. Parallel consumers (repeats, forest members) each get a
//! child split off sequentially before work is distributed, so results do
//! not depend on scheduling.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: ChaCha12Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng {
            inner: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    /// Derives an independent child generator from the current state.
    pub fn split(&mut self) -> SeededRng {
        let mut key = [0u8; 32];
        self.inner.fill_bytes(&mut key);
        SeededRng {
            inner: ChaCha12Rng::from_seed(key),
        }
    }

    /// Splits off `n` children in order.
    pub fn split_n(&mut self, n: usize) -> Vec<SeededRng> {
        (0..n).map(|_| self.split()).collect()
    }

    /// Uniform draw in `[lo, hi)` without argument checks.
    #[inline]
    pub(crate) fn uniform_unchecked(&mut self, lo: f64, hi: f64) -> f64 {
        self.inner.random_range(lo..hi)
    }

    /// Uniform index in `0..n`. `n` must be positive.
    #[inline]
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Draws a real uniformly from `[lo, hi)`.
pub fn uniform(rng: &mut SeededRng, lo: f64, hi: f64) -> Result<f64> {
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "uniform bounds must be finite, got [{lo}, {hi})"
        )));
    }
    if lo >= hi {
        return Err(Error::InvalidArgument(format!(
            "uniform requires lo < hi, got [{lo}, {hi})"
        )));
    }
    Ok(rng.uniform_unchecked(lo, hi))
}
