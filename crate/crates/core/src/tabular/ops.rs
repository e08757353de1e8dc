use rand::seq::SliceRandom;

use super::{Dataset, SeriesWindow, SplitResult};
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSummary {
    pub mean: f64,
    pub max: f64,
    pub min: f64,
}

pub fn aggregate_series(w: &SeriesWindow) -> Result<SeriesSummary> {
    let values = w.values();
    if values.is_empty() {
        return Err(Error::EmptySeries);
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    // rounding in the sum can push the mean a few ulps past an extreme
    Ok(SeriesSummary {
        mean: mean.clamp(min, max),
        max,
        min,
    })
}

/// Summaries for the half-open windows `[b[k], b[k+1])` given by caller
/// supplied boundaries (for example calendar-day starts, in hours). Windows
/// without observations yield `None`.
pub fn aggregate_windows(w: &SeriesWindow, boundaries: &[f64]) -> Result<Vec<Option<SeriesSummary>>> {
    if boundaries.windows(2).any(|b| b[0].partial_cmp(&b[1]) != Some(std::cmp::Ordering::Less)) {
        return Err(Error::Parameter("window boundaries must be strictly increasing".into()));
    }
    boundaries
        .windows(2)
        .map(|b| {
            let (ts, vs): (Vec<f64>, Vec<f64>) = w
                .timestamps()
                .iter()
                .zip(w.values())
                .filter(|(t, _)| **t >= b[0] && **t < b[1])
                .map(|(t, v)| (*t, *v))
                .unzip();
            if vs.is_empty() {
                Ok(None)
            } else {
                aggregate_series(&SeriesWindow::new(ts, vs)?).map(Some)
            }
        })
        .collect()
}

/// Drops rows where strictly more than half of the critical features are
/// missing. Returns the kept dataset and the dropped row ids.
pub fn exclude_rows(d: &Dataset) -> (Dataset, Vec<String>) {
    let critical: Vec<usize> = d
        .schema()
        .iter()
        .enumerate()
        .filter(|(_, f)| f.critical)
        .map(|(i, _)| i)
        .collect();
    if critical.is_empty() {
        return (d.clone(), Vec::new());
    }
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for (i, row) in d.rows().iter().enumerate() {
        let missing = critical.iter().filter(|&&c| row[c].is_missing()).count();
        if 2 * missing > critical.len() {
            dropped.push(d.row_ids()[i].clone());
        } else {
            kept.push(i);
        }
    }
    (d.subset(&kept), dropped)
}

/// Seeded random train/test split with `round(train_fraction * n)` training rows.
pub fn split(d: &Dataset, train_fraction: f64, seed: u64) -> Result<SplitResult> {
    let n = d.n_rows();
    if n < 2 {
        return Err(Error::Size(format!("cannot split {n} rows")));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Parameter(format!(
            "train fraction {train_fraction} must lie in (0, 1)"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from_seed(seed));
    let n_train = (train_fraction * n as f64).round() as usize;
    Ok(SplitResult {
        train: d.subset(&order[..n_train]),
        test: d.subset(&order[n_train..]),
        seed,
        train_fraction,
    })
}
