mod common;

use ndarray::{array, Array2};
use proptest::prelude::*;
use rand::Rng;
use riskforest_core::selection::{fit_lasso, lambda_max};

const TOL: f64 = 1e-8;

/// Minimize a unimodal function on [lo, hi].
fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, eps: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    while hi - lo > eps {
        if f(c) < f(d) {
            hi = d;
        } else {
            lo = c;
        }
        c = hi - g * (hi - lo);
        d = lo + g * (hi - lo);
    }
    0.5 * (lo + hi)
}

#[test]
fn one_dimensional_fit_matches_golden_section() {
    let x = array![[1.0], [-1.0]];
    let y = [2.0, -2.0];
    let lambda = 2.0;
    // both x and y already have zero mean, so the intercept vanishes
    let objective = |b: f64| (y[0] - b).powi(2) + (y[1] + b).powi(2) + lambda * b.abs();
    let oracle = golden_section(objective, -10.0, 10.0, 1e-12);
    let m = fit_lasso(x.view(), &y, lambda, 1000, TOL).unwrap();
    assert!((m.coefficients[0] - oracle).abs() < 1e-6);
    assert!((oracle - 1.5).abs() < 1e-6);
}

fn random_problem(seed: u64, n: usize, p: usize) -> (Array2<f64>, Vec<f64>) {
    let mut r = common::rng(seed);
    let x = Array2::from_shape_fn((n, p), |_| r.random::<f64>() * 2.0 - 1.0);
    let beta: Vec<f64> = (0..p).map(|j| if j % 3 == 0 { r.random::<f64>() * 4.0 - 2.0 } else { 0.0 }).collect();
    let y = x
        .rows()
        .into_iter()
        .map(|row| row.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>() + 0.3 * (r.random::<f64>() - 0.5) + 1.0)
        .collect();
    (x, y)
}

/// Largest violation of the subgradient conditions, recomputed from scratch.
fn stationarity_violation(x: &Array2<f64>, y: &[f64], beta: &[f64], lambda: f64) -> f64 {
    let n = y.len() as f64;
    let p = x.ncols();
    let y_mean = y.iter().sum::<f64>() / n;
    let x_mean: Vec<f64> = (0..p).map(|j| x.column(j).sum() / n).collect();
    let r: Vec<f64> = (0..y.len())
        .map(|i| {
            let fit: f64 = (0..p).map(|j| (x[[i, j]] - x_mean[j]) * beta[j]).sum();
            y[i] - y_mean - fit
        })
        .collect();
    (0..p)
        .map(|j| {
            let g = 2.0 * (0..y.len()).map(|i| (x[[i, j]] - x_mean[j]) * r[i]).sum::<f64>();
            if beta[j] == 0.0 {
                (g.abs() - lambda).max(0.0)
            } else {
                (g - lambda * beta[j].signum()).abs()
            }
        })
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn converged_fits_are_stationary(seed in any::<u64>(), n in 5usize..=200, p in 1usize..=20, frac in 0.001f64..1.0) {
        let (x, y) = random_problem(seed, n, p);
        let lambda = frac * lambda_max(x.view(), &y).unwrap();
        let m = fit_lasso(x.view(), &y, lambda, 100_000, TOL).unwrap();
        prop_assume!(m.converged);
        let v = stationarity_violation(&x, &y, &m.coefficients, lambda);
        prop_assert!(v <= 10.0 * TOL, "violation {}", v);
    }

    #[test]
    fn penalty_at_or_above_max_zeroes_everything(seed in any::<u64>(), n in 2usize..=200, p in 1usize..=20, over in 1.0f64..5.0) {
        let (x, y) = random_problem(seed, n, p);
        let lambda = over * lambda_max(x.view(), &y).unwrap();
        let m = fit_lasso(x.view(), &y, lambda, 1000, TOL).unwrap();
        prop_assert!(m.coefficients.iter().all(|&b| b == 0.0));
    }
}
