//! Shared fixtures for the criterion benchmarks.

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `n x p` uniform features with label `x0 + x1 * x2 > 0.8` plus 5% flips.
pub fn classification_data(n: usize, p: usize, seed: u64) -> (Array2<f64>, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_fn((n, p), |_| rng.random::<f64>());
    let y = x
        .rows()
        .into_iter()
        .map(|r| {
            let signal = r[0] + r[1 % p] * r[2 % p] > 0.8;
            u8::from(signal ^ (rng.random::<f64>() < 0.05))
        })
        .collect();
    (x, y)
}

pub fn column_names(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("x{j}")).collect()
}
