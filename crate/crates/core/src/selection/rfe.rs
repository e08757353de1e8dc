use ndarray::{ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::{SelectionMethod, SelectionResult, SelectionStep};
use crate::error::{Error, Result};
use crate::forest::{feature_importance, fit_forest, ForestConfig};
use crate::tuning::{cross_validate, stratified_kfold, ScoreMetric};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RfeConfig {
    pub target_count: usize,
    pub step: usize,
    pub cv_folds: usize,
    pub seed: u64,
    /// Forest used to rank columns in every round.
    pub forest: ForestConfig,
}

impl Default for RfeConfig {
    fn default() -> Self {
        Self {
            target_count: 10,
            step: 1,
            cv_folds: 5,
            seed: 42,
            forest: ForestConfig::default(),
        }
    }
}

/// Recursive feature elimination.
///
/// Each round scores the surviving columns by stratified CV accuracy, fits a
/// forest on all rows, and drops the `step` columns with the lowest impurity
/// importance (ties drop the higher index first) without going below
/// `target_count`.
pub fn rfe(x: ArrayView2<f64>, y: &[u8], cfg: &RfeConfig) -> Result<SelectionResult> {
    let p = x.ncols();
    if cfg.target_count == 0 || cfg.target_count > p {
        return Err(Error::Parameter(format!(
            "target_count {} must lie in 1..={p}",
            cfg.target_count
        )));
    }
    if cfg.step == 0 {
        return Err(Error::Parameter("step must be at least 1".into()));
    }
    let folds = stratified_kfold(y, cfg.cv_folds, cfg.seed)?;

    let mut alive: Vec<usize> = (0..p).collect();
    let mut trace = Vec::new();
    while alive.len() > cfg.target_count {
        let sub = x.select(Axis(1), &alive);
        let cv = cross_validate(sub.view(), y, &cfg.forest, &folds, None, ScoreMetric::Accuracy)?;
        let names = alive.iter().map(|c| format!("c{c}")).collect();
        let model = fit_forest(sub.view(), y, &cfg.forest, names)?;
        let importance = feature_importance(&model);

        let mut order: Vec<usize> = (0..alive.len()).collect();
        order.sort_by(|&a, &b| importance[a].total_cmp(&importance[b]).then(b.cmp(&a)));
        let n_remove = cfg.step.min(alive.len() - cfg.target_count);
        let mut drop: Vec<usize> = order[..n_remove].iter().map(|&i| alive[i]).collect();
        drop.sort_unstable();
        alive.retain(|c| !drop.contains(c));
        trace.push(SelectionStep {
            step: trace.len(),
            removed: drop,
            score: Some(cv.mean),
        });
    }
    Ok(SelectionResult {
        input_columns: p,
        kept_columns: alive,
        method: SelectionMethod::Rfe,
        trace,
        warnings: Vec::new(),
    })
}
