#![allow(dead_code)]

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use riskforest_core::forest::fit_forest;
use riskforest_core::{ForestConfig, ForestModel};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, p), |_| rng.random::<f64>())
}

/// Labels from a noisy linear score so both classes are present.
pub fn noisy_labels(rng: &mut ChaCha8Rng, x: &Array2<f64>) -> Vec<u8> {
    let mut y: Vec<u8> = x
        .rows()
        .into_iter()
        .map(|r| {
            let s: f64 = r.iter().enumerate().map(|(j, v)| v / (j + 1) as f64).sum();
            let norm: f64 = (0..r.len()).map(|j| 1.0 / (j + 1) as f64).sum();
            u8::from(s / norm + 0.2 * (rng.random::<f64>() - 0.5) > 0.5)
        })
        .collect();
    y[0] = 0;
    y[1] = 1;
    y
}

pub fn names(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("x{j}")).collect()
}

pub fn small_forest(x: &Array2<f64>, y: &[u8], n_trees: usize, seed: u64) -> ForestModel {
    let cfg = ForestConfig {
        n_trees,
        max_depth: riskforest_core::MaxDepth::limit(4),
        seed,
        ..ForestConfig::default()
    };
    fit_forest(x.view(), y, &cfg, names(x.ncols())).expect("forest fits")
}
