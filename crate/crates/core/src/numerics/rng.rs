//! Seeded, splittable random streams.
//!
//! A stream is ChaCha8 keyed by `seed` (expanded with `seed_from_u64`) with
//! the 64-bit ChaCha stream word set to `stream_id`. Gaussians come from the
//! `rand_distr` ziggurat sampler; versions are pinned by the lockfile.

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        RngStream {
            seed,
            stream_id,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Equiprobable bit.
    pub fn bit(&mut self) -> u8 {
        (self.inner.next_u32() >> 31) as u8
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }
}

impl RngCore for RngStream {
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

/// Circularly symmetric `CN(0, variance)` sample.
pub fn complex_gaussian(rng: &mut RngStream, variance: f64) -> Complex64 {
    let sigma = (0.5 * variance).sqrt();
    let re = rng.standard_normal();
    let im = rng.standard_normal();
    Complex64::new(sigma * re, sigma * im)
}
