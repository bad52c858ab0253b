//! Seedable, platform-independent random stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// ChaCha8 seeded through `SeedableRng::seed_from_u64`.
///
/// ChaCha output is defined by its reference algorithm and does not depend on
/// word size or endianness, so a seed yields the same stream everywhere.
#[derive(Debug, Clone)]
pub struct SimRng {
    inner: ChaCha8Rng,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        SimRng {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Uniform on `0..n`. `n` must be positive.
    pub fn next_int(&mut self, n: u32) -> u32 {
        assert!(n > 0, "next_int bound must be positive");
        self.inner.gen_range(0..n)
    }

    /// Uniform on `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        self.inner.gen()
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}
