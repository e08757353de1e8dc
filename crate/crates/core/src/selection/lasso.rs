//! LASSO on the unaveraged objective
//! `sum_i (y_i - b - x_i . beta)^2 + lambda * sum_j |beta_j|`
//! with an unpenalized intercept `b`.
//!
//! Columns and the response are centered, then coordinates are updated
//! cyclically with `beta_j <- S(x_j . r_(j), lambda / 2) / (x_j . x_j)`, where
//! `r_(j)` is the partial residual without coordinate `j`. Because the
//! objective is not divided by `n`, useful `lambda` values grow with `n`.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::{SelectionMethod, SelectionResult, SelectionStep};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
    pub iterations_run: usize,
    pub converged: bool,
}

impl LassoModel {
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.intercept
            + row
                .iter()
                .zip(&self.coefficients)
                .map(|(x, b)| x * b)
                .sum::<f64>()
    }
}

/// `sign(z) * max(|z| - t, 0)`
pub fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

fn check_inputs(x: &ArrayView2<f64>, y: &[f64]) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::Shape(format!("{} rows but {} targets", x.nrows(), y.len())));
    }
    if x.nrows() == 0 {
        return Err(Error::Size("LASSO needs at least one row".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Input("LASSO inputs must be finite".into()));
    }
    Ok(())
}

struct Centered {
    columns: Vec<Vec<f64>>,
    x_mean: Vec<f64>,
    y_mean: f64,
    y: Vec<f64>,
    norms: Vec<f64>,
}

fn center(x: &ArrayView2<f64>, y: &[f64]) -> Centered {
    let n = x.nrows() as f64;
    let y_mean = y.iter().sum::<f64>() / n;
    let mut x_mean = Vec::with_capacity(x.ncols());
    let mut columns = Vec::with_capacity(x.ncols());
    let mut norms = Vec::with_capacity(x.ncols());
    for col in x.columns() {
        let m = col.sum() / n;
        let c: Vec<f64> = col.iter().map(|v| v - m).collect();
        let norm: f64 = c.iter().map(|v| v * v).sum();
        let scale: f64 = col.iter().map(|v| v * v).sum();
        // constant (or all-zero) columns only carry rounding noise after centering
        norms.push(if norm <= 1e-24 * (1.0 + scale) { 0.0 } else { norm });
        x_mean.push(m);
        columns.push(c);
    }
    Centered {
        columns,
        x_mean,
        y_mean,
        y: y.iter().map(|v| v - y_mean).collect(),
        norms,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// Smallest `lambda` whose solution is the zero vector:
/// `max_j |2 sum_i x_ij (y_i - mean(y))|`.
pub fn lambda_max(x: ArrayView2<f64>, y: &[f64]) -> Result<f64> {
    check_inputs(&x, y)?;
    let c = center(&x, y);
    Ok(c.columns
        .iter()
        .zip(&c.norms)
        .map(|(col, &norm)| if norm == 0.0 { 0.0 } else { 2.0 * dot(col, &c.y).abs() })
        .fold(0.0, f64::max))
}

/// `points` values spaced evenly in log scale from `lambda_max` down to
/// `lambda_max / ratio`.
pub fn lambda_grid(lambda_max: f64, points: usize, ratio: f64) -> Vec<f64> {
    if points <= 1 {
        return vec![lambda_max];
    }
    let lo = (lambda_max / ratio).ln();
    let hi = lambda_max.ln();
    (0..points)
        .map(|i| (hi + (lo - hi) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

/// Objective value of `model` on `(x, y)`, intercept included.
pub fn lasso_objective(x: ArrayView2<f64>, y: &[f64], model: &LassoModel) -> f64 {
    let rss: f64 = x
        .rows()
        .into_iter()
        .zip(y)
        .map(|(row, &t)| {
            let r = t - model.intercept - dot(&row.to_vec(), &model.coefficients);
            r * r
        })
        .sum();
    rss + model.lambda * model.coefficients.iter().map(|b| b.abs()).sum::<f64>()
}

/// Largest violation of the subgradient conditions
/// `|2 x_j . r| <= lambda` (beta_j = 0) and `2 x_j . r = lambda sign(beta_j)`.
fn kkt_violation(c: &Centered, beta: &[f64], residual: &[f64], lambda: f64) -> f64 {
    c.columns
        .iter()
        .zip(&c.norms)
        .zip(beta)
        .filter(|((_, &norm), _)| norm > 0.0)
        .map(|((col, _), &b)| {
            let g = 2.0 * dot(col, residual);
            if b == 0.0 {
                (g.abs() - lambda).max(0.0)
            } else {
                (g - lambda * b.signum()).abs()
            }
        })
        .fold(0.0, f64::max)
}

fn residual(c: &Centered, beta: &[f64]) -> Vec<f64> {
    let mut r = c.y.clone();
    for (col, &b) in c.columns.iter().zip(beta) {
        if b != 0.0 {
            r.iter_mut().zip(col).for_each(|(ri, xi)| *ri -= b * xi);
        }
    }
    r
}

/// Coordinate descent, recording the objective after every full sweep.
///
/// A sweep whose largest coefficient change is below `tol` ends the fit once
/// the subgradient conditions also hold to within `tol` on a freshly computed
/// residual. If `max_iter` sweeps pass first, the model is returned with
/// `converged == false`.
pub fn fit_lasso_traced(
    x: ArrayView2<f64>,
    y: &[f64],
    lambda: f64,
    max_iter: usize,
    tol: f64,
) -> Result<(LassoModel, Vec<f64>)> {
    check_inputs(&x, y)?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Parameter(format!("lambda {lambda} must be a finite value >= 0")));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Parameter("tol must be positive".into()));
    }
    let c = center(&x, y);
    let p = c.columns.len();
    let mut beta = vec![0.0; p];
    let mut r = c.y.clone();
    let mut objectives = Vec::new();
    let half = lambda / 2.0;
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < max_iter {
        sweeps += 1;
        let mut max_change: f64 = 0.0;
        for ((&norm, col), b) in c.norms.iter().zip(&c.columns).zip(beta.iter_mut()) {
            if norm == 0.0 {
                continue;
            }
            let z = dot(col, &r) + norm * *b;
            let updated = soft_threshold(z, half) / norm;
            let delta = updated - *b;
            if delta != 0.0 {
                r.iter_mut().zip(col).for_each(|(ri, xi)| *ri -= delta * xi);
                *b = updated;
                max_change = max_change.max(delta.abs());
            }
        }
        objectives.push(
            r.iter().map(|v| v * v).sum::<f64>() + lambda * beta.iter().map(|b| b.abs()).sum::<f64>(),
        );
        if max_change < tol {
            r = residual(&c, &beta);
            if kkt_violation(&c, &beta, &r, lambda) <= tol {
                converged = true;
                break;
            }
        }
    }
    let intercept = c.y_mean - dot(&c.x_mean, &beta);
    Ok((
        LassoModel {
            coefficients: beta,
            intercept,
            lambda,
            iterations_run: sweeps,
            converged,
        },
        objectives,
    ))
}

pub fn fit_lasso(
    x: ArrayView2<f64>,
    y: &[f64],
    lambda: f64,
    max_iter: usize,
    tol: f64,
) -> Result<LassoModel> {
    fit_lasso_traced(x, y, lambda, max_iter, tol).map(|(m, _)| m)
}

/// Keep columns with `|beta_j| > threshold`. If none survive, keep the single
/// largest-magnitude coefficient (column 0 for the zero vector) and warn.
pub fn lasso_select(model: &LassoModel, threshold: f64) -> SelectionResult {
    let p = model.coefficients.len();
    let mut kept: Vec<usize> = (0..p)
        .filter(|&j| model.coefficients[j].abs() > threshold)
        .collect();
    let mut warnings = Vec::new();
    if kept.is_empty() && p > 0 {
        let mut best = 0;
        for j in 1..p {
            if model.coefficients[j].abs() > model.coefficients[best].abs() {
                best = j;
            }
        }
        warnings.push(format!(
            "no coefficient exceeds {threshold}; keeping column {best} (largest |beta|)"
        ));
        kept.push(best);
    }
    let removed: Vec<usize> = (0..p).filter(|j| !kept.contains(j)).collect();
    SelectionResult {
        input_columns: p,
        kept_columns: kept,
        method: SelectionMethod::Lasso,
        trace: vec![SelectionStep {
            step: 0,
            removed,
            score: None,
        }],
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use ndarray::{array, Array2};
    use proptest::prelude::*;
    use rand::Rng;

    use super::*;
    use crate::seed::rng_from_seed;

    fn model_with(beta: Vec<f64>) -> LassoModel {
        LassoModel {
            coefficients: beta,
            intercept: 0.0,
            lambda: 1.0,
            iterations_run: 1,
            converged: true,
        }
    }

    #[test]
    fn soft_threshold_values() {
        assert_eq!(soft_threshold(4.0, 1.0), 3.0);
        assert_eq!(soft_threshold(-4.0, 1.0), -3.0);
        assert_eq!(soft_threshold(0.5, 1.0), 0.0);
    }

    #[test]
    fn lambda_zero_is_least_squares() {
        let x = array![[1.0], [-1.0]];
        let m = fit_lasso(x.view(), &[2.0, -2.0], 0.0, 100, 1e-12).unwrap();
        assert_eq!(m.coefficients, vec![2.0]);
        assert!(m.converged);
    }

    #[test]
    fn one_dimensional_penalized_solution() {
        let x = array![[1.0], [-1.0]];
        let m = fit_lasso(x.view(), &[2.0, -2.0], 2.0, 100, 1e-12).unwrap();
        assert_eq!(m.coefficients, vec![1.5]);
        assert_eq!(m.intercept, 0.0);
    }

    #[test]
    fn lambda_at_max_gives_exact_zero() {
        let mut rng = rng_from_seed(9);
        let x = Array2::from_shape_fn((30, 5), |_| rng.random::<f64>());
        let y: Vec<f64> = (0..30).map(|_| rng.random::<f64>()).collect();
        let lmax = lambda_max(x.view(), &y).unwrap();
        for lambda in [lmax, lmax * 1.5] {
            let m = fit_lasso(x.view(), &y, lambda, 100, 1e-8).unwrap();
            assert!(m.coefficients.iter().all(|&b| b == 0.0));
            let mean = y.iter().sum::<f64>() / 30.0;
            assert!((m.intercept - mean).abs() < 1e-15);
        }
        let m = fit_lasso(x.view(), &y, lmax * 0.9, 10_000, 1e-8).unwrap();
        assert!(m.coefficients.iter().any(|&b| b != 0.0));
    }

    #[test]
    fn zero_and_constant_columns_stay_zero() {
        let x = array![[0.0, 3.0, 1.0], [0.0, 3.0, 2.0], [0.0, 3.0, 4.0]];
        let m = fit_lasso(x.view(), &[1.0, 2.0, 4.0], 0.0, 100, 1e-10).unwrap();
        assert_eq!(&m.coefficients[..2], &[0.0, 0.0]);
        assert!((m.coefficients[2] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let x = array![[f64::NAN], [1.0]];
        assert!(matches!(fit_lasso(x.view(), &[0.0, 1.0], 1.0, 10, 1e-8), Err(Error::Input(_))));
    }

    #[test]
    fn exhausted_iterations_are_reported() {
        let mut rng = rng_from_seed(4);
        let x = Array2::from_shape_fn((20, 6), |_| rng.random::<f64>());
        let y: Vec<f64> = (0..20).map(|_| rng.random::<f64>()).collect();
        let m = fit_lasso(x.view(), &y, 0.01, 1, 1e-14).unwrap();
        assert!(!m.converged);
        assert_eq!(m.iterations_run, 1);
    }

    #[test]
    fn selection_examples() {
        let r = lasso_select(&model_with(vec![0.0, 1.5, 0.0, -0.2]), 0.0);
        assert_eq!(r.kept_columns, vec![1, 3]);
        assert!(r.warnings.is_empty());
        assert_eq!(r.replay(), r.kept_columns);

        let r = lasso_select(&model_with(vec![0.0; 3]), 0.0);
        assert_eq!(r.kept_columns, vec![0]);
        assert_eq!(r.warnings.len(), 1);

        let r = lasso_select(&model_with(vec![0.3]), 0.5);
        assert_eq!(r.kept_columns, vec![0]);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn grid_spacing() {
        let g = lambda_grid(100.0, 20, 1000.0);
        assert_eq!(g.len(), 20);
        assert!((g[0] - 100.0).abs() < 1e-12);
        assert!((g[19] - 0.1).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[0] > w[1]));
    }

    fn instance(seed: u64) -> (Array2<f64>, Vec<f64>) {
        let mut rng = rng_from_seed(seed);
        let n = rng.random_range(5..60);
        let p = rng.random_range(1..8);
        let x = Array2::from_shape_fn((n, p), |_| rng.random::<f64>() * 2.0 - 1.0);
        let y = (0..n)
            .map(|i| x[[i, 0]] * 1.5 - x[[i, p - 1]] + rng.random::<f64>())
            .collect();
        (x, y)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn objective_never_increases_across_sweeps(seed in any::<u64>(), frac in 0.01f64..1.0) {
            let (x, y) = instance(seed);
            let lambda = frac * lambda_max(x.view(), &y).unwrap();
            let (_, objectives) = fit_lasso_traced(x.view(), &y, lambda, 5000, 1e-10).unwrap();
            for w in objectives.windows(2) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12);
            }
        }

        #[test]
        fn scaling_response_and_penalty_scales_solution(seed in any::<u64>(), frac in 0.05f64..0.9, scale in 0.1f64..10.0) {
            let (x, y) = instance(seed);
            prop_assume!(x.nrows() > x.ncols() + 2);
            let lambda = frac * lambda_max(x.view(), &y).unwrap();
            let a = fit_lasso(x.view(), &y, lambda, 200_000, 1e-13).unwrap();
            let ys: Vec<f64> = y.iter().map(|v| v * scale).collect();
            let b = fit_lasso(x.view(), &ys, lambda * scale, 200_000, 1e-13).unwrap();
            prop_assume!(a.converged && b.converged);
            for (u, v) in a.coefficients.iter().zip(&b.coefficients) {
                prop_assert!((u * scale - v).abs() < 1e-9, "{} vs {}", u * scale, v);
            }
        }
    }
}
