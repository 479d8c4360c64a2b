#![allow(dead_code)]

use ndarray::{Array1, Array2};
use proxlogit::dataset::{generate_synthetic, SyntheticSpec};
use proxlogit::Dataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Gaussian features, labels from an independent coin per sample.
pub fn random_instance(n: usize, d: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_fn((d, n), |_| rng.sample::<f64, _>(StandardNormal));
    let mut y: Array1<f64> = (0..n).map(|_| f64::from(rng.random_bool(0.5))).collect();
    // keep both classes present
    if n >= 2 {
        y[0] = 0.0;
        y[1] = 1.0;
    }
    Dataset::new(x, y).unwrap()
}

pub fn random_vector(d: usize, scale: f64, rng: &mut ChaCha8Rng) -> Array1<f64> {
    (0..d).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// The sparse synthetic instance used throughout: n=200, d=50, 5 informative
/// features, seed 7.
pub fn synthetic() -> Dataset {
    generate_synthetic(&SyntheticSpec::new(200, 50, 5, 7)).unwrap().0
}

pub fn synthetic_with(n: usize, d: usize, k: usize, seed: u64) -> Dataset {
    generate_synthetic(&SyntheticSpec::new(n, d, k, seed)).unwrap().0
}

pub fn norm_sq(v: &Array1<f64>) -> f64 {
    v.dot(v)
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}
