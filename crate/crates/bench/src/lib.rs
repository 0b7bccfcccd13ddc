//! Shared fixtures for the benchmark targets.

use awgan_core::autodiff::Array;
use awgan_core::awweights::GradientPair;
use awgan_core::nn::ParamVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random batch of `n` points in two dimensions.
pub fn random_batch(n: usize, seed: u64) -> Array {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..n * 2).map(|_| rng.gen_range(-1.5..1.5)).collect();
    Array::matrix(n, 2, data).expect("sized")
}

/// Random gradient pair of the toy discriminator's parameter count.
pub fn random_gradient_pair(len: usize, seed: u64) -> GradientPair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> ParamVector {
        ParamVector((0..len).map(|_| rng.gen_range(-1.0..1.0)).collect())
    };
    let g_r = draw();
    let g_f = draw();
    GradientPair::new(g_r, g_f).expect("equal lengths")
}
