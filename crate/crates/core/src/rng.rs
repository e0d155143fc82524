//! Random streams.
//!
//! Every run draws from its own ChaCha8 stream. The stream for run `i` of an
//! ensemble with master seed `s` is `ChaCha8Rng::seed_from_u64(s)` with the
//! stream id set to `i`, so runs never share random numbers and any single
//! run can be reproduced in isolation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type Stream = ChaCha8Rng;

/// Per-run stream derived from a master seed and a run index.
pub fn stream(master_seed: u64, run_index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(run_index);
    rng
}

#[inline]
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Uniform draw on `[0, 1)`.
#[inline]
pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}

/// Uniform draw on `[lo, hi)`.
#[inline]
pub fn uniform_in<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * uniform(rng)
}
