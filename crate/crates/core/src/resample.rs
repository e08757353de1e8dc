//! SMOTE oversampling of the minority class.
//!
//! Synthetic rows are `base + interp * (neighbor - base)` with `interp` drawn
//! uniformly from `[0, 1)`, the neighbor drawn uniformly from the base row's
//! k nearest minority neighbors, and base rows taken round-robin over the
//! minority rows in index order. The input is numeric after preprocessing, so
//! one-hot cells of synthetic rows may be fractional.

use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoteConfig {
    pub k_neighbors: usize,
    /// Desired minority / majority count ratio after oversampling.
    pub target_ratio: f64,
    pub seed: u64,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        Self {
            k_neighbors: 5,
            target_ratio: 1.0,
            seed: 42,
        }
    }
}

impl SmoteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_neighbors == 0 {
            return Err(Error::Config("k_neighbors must be at least 1".into()));
        }
        if !(self.target_ratio > 0.0 && self.target_ratio <= 1.0) {
            return Err(Error::Config(format!(
                "target_ratio {} must lie in (0, 1]",
                self.target_ratio
            )));
        }
        Ok(())
    }
}

/// Where a synthetic row came from. Indices refer to rows of the input matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticProvenance {
    pub base: usize,
    pub neighbor: usize,
    pub interp: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoteOutput {
    /// Original rows first, then synthetic rows.
    pub x: Array2<f64>,
    pub y: Vec<u8>,
    /// One entry per synthetic row, in output order.
    pub provenance: Vec<SyntheticProvenance>,
    pub minority_class: u8,
}

impl SmoteOutput {
    pub fn n_synthetic(&self) -> usize {
        self.provenance.len()
    }
}

fn sq_dist(a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

/// For each row, the indices of its `k` nearest other rows by Euclidean
/// distance; equal distances go to the lower index.
pub fn knn_minority(x_min: ArrayView2<f64>, k: usize) -> Result<Vec<Vec<usize>>> {
    let m = x_min.nrows();
    if k == 0 {
        return Err(Error::Config("k_neighbors must be at least 1".into()));
    }
    if m < k + 1 {
        return Err(Error::Config(format!(
            "{m} minority rows cannot supply {k} neighbors each"
        )));
    }
    Ok((0..m)
        .into_par_iter()
        .map(|i| {
            let row = x_min.row(i);
            let mut d: Vec<(f64, usize)> = (0..m)
                .filter(|&j| j != i)
                .map(|j| (sq_dist(row, x_min.row(j)), j))
                .collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            d.truncate(k);
            d.into_iter().map(|(_, j)| j).collect()
        })
        .collect())
}

pub fn smote(x: ArrayView2<f64>, y: &[u8], cfg: &SmoteConfig) -> Result<SmoteOutput> {
    cfg.validate()?;
    if x.nrows() != y.len() {
        return Err(Error::Shape(format!("{} rows but {} labels", x.nrows(), y.len())));
    }
    let n_pos = y.iter().filter(|&&l| l == 1).count();
    let n_neg = y.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Class("SMOTE needs both classes present".into()));
    }
    let (minority_class, n_min, n_maj) = if n_pos <= n_neg {
        (1u8, n_pos, n_neg)
    } else {
        (0u8, n_neg, n_pos)
    };
    let wanted = (cfg.target_ratio * n_maj as f64).floor() as usize;
    let n_new = wanted.saturating_sub(n_min);
    if n_new == 0 {
        return Ok(SmoteOutput {
            x: x.to_owned(),
            y: y.to_vec(),
            provenance: Vec::new(),
            minority_class,
        });
    }

    let minority_rows: Vec<usize> = (0..y.len()).filter(|&i| y[i] == minority_class).collect();
    let x_min = x.select(Axis(0), &minority_rows);
    let neighbors = knn_minority(x_min.view(), cfg.k_neighbors)?;

    let mut rng = rng_from_seed(cfg.seed);
    let p = x.ncols();
    let mut out = Array2::<f64>::zeros((x.nrows() + n_new, p));
    out.slice_mut(ndarray::s![..x.nrows(), ..]).assign(&x);
    let mut provenance = Vec::with_capacity(n_new);
    for s in 0..n_new {
        let local = s % n_min;
        let nb_local = neighbors[local][rng.random_range(0..cfg.k_neighbors)];
        let interp: f64 = rng.random();
        let (base, neighbor) = (minority_rows[local], minority_rows[nb_local]);
        let mut row = out.row_mut(x.nrows() + s);
        for j in 0..p {
            let b = x[[base, j]];
            row[j] = b + interp * (x[[neighbor, j]] - b);
        }
        provenance.push(SyntheticProvenance {
            base,
            neighbor,
            interp,
        });
    }
    let mut labels = y.to_vec();
    labels.extend(std::iter::repeat_n(minority_class, n_new));
    Ok(SmoteOutput {
        x: out,
        y: labels,
        provenance,
        minority_class,
    })
}
