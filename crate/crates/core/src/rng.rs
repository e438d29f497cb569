//! Seeded sampling.
//!
//! All randomness comes from SplitMix64 with the state initialised to the
//! seed itself. A draw `u` in `[0, 1)` is `(next_u64 >> 11) * 2^-53`, and a
//! point of `[lo, hi]` is `lo + (hi - lo) * u`. Sample `i` of a run with seed
//! `s` is the `i`-th such point of the stream seeded with `s`, so fixtures are
//! reproducible across implementations.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

/// Mixed into start-point bits to seed per-orbit dither streams.
const DITHER_SALT: u64 = 0x6a09_e667_f3bc_c909;

pub struct Sampler {
    inner: SplitMix64,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler {
            inner: SplitMix64::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// Uniform in `[-1, 1)`.
    pub fn symmetric(&mut self) -> f64 {
        2.0 * self.unit() - 1.0
    }
}

/// The first `n` uniform points of `[lo, hi]` for `seed`.
pub fn uniform_points(seed: u64, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut s = Sampler::new(seed);
    (0..n).map(|_| s.uniform(lo, hi)).collect()
}

/// Stream used to dither the orbit of `x`.
pub fn dither_stream(x: f64) -> Sampler {
    Sampler::new(x.to_bits() ^ DITHER_SALT)
}
