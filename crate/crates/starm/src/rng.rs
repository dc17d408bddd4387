//! Seeded random number generation.
//!
//! Every randomized routine in this crate draws from a ChaCha8 stream seeded
//! with a caller-supplied `u64`, so results are reproducible across runs,
//! platforms, and thread counts. Samples are always drawn as `f64` and then
//! converted to the working scalar type, which keeps the stream identical for
//! `f32` and `f64` instantiations.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StandardUniform};

use crate::scalar::{sc, Scalar};

/// The deterministic generator used throughout the crate.
pub type Rng = ChaCha8Rng;

/// Create the crate-standard generator for a seed.
pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One standard-normal draw.
pub fn normal<T: Scalar>(rng: &mut Rng) -> T {
    let x: f64 = StandardNormal.sample(rng);
    sc(x)
}

/// One uniform draw from `[0, 1)`.
pub fn uniform<T: Scalar>(rng: &mut Rng) -> T {
    let x: f64 = StandardUniform.sample(rng);
    sc(x)
}

/// Fill a vector with standard-normal draws.
pub fn normal_vec<T: Scalar>(rng: &mut Rng, len: usize) -> Vec<T> {
    (0..len).map(|_| normal(rng)).collect()
}
