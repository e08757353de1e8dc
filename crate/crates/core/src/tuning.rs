//! Stratified k-fold cross-validation and exhaustive grid search.

use ndarray::{ArrayView2, Axis};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::{fit_forest, FeaturesPerSplit, ForestConfig, MaxDepth};
use crate::metrics::roc_auc;
use crate::resample::{smote, SmoteConfig, SyntheticProvenance};
use crate::seed::{derive_seed, stage_rng};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    /// Fold index of every row.
    pub assignment: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn held_out(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == fold)
            .collect()
    }

    pub fn training(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] != fold)
            .collect()
    }
}

/// Shuffle each class with the seed and deal its rows round-robin into `k`
/// folds. The dealing position carries over from one class to the next so
/// fold sizes differ by at most one.
pub fn stratified_kfold(y: &[u8], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Parameter(format!("k = {k}; need at least 2 folds")));
    }
    let mut assignment = vec![0usize; y.len()];
    let mut next = 0usize;
    for class in [0u8, 1] {
        let mut rows: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        if rows.len() < k {
            return Err(Error::Stratification(format!(
                "class {class} has {} rows, fewer than k = {k}",
                rows.len()
            )));
        }
        rows.shuffle(&mut stage_rng(seed, "stratify", u64::from(class)));
        for r in rows {
            assignment[r] = next % k;
            next += 1;
        }
    }
    Ok(FoldPlan {
        k,
        assignment,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreMetric {
    #[default]
    Accuracy,
    Auc,
}

/// Discrete values per hyperparameter; cells are enumerated row-major in the
/// field order below (last field varies fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_trees: Vec<usize>,
    pub max_depth: Vec<MaxDepth>,
    pub min_samples_split: Vec<usize>,
    pub features_per_split: Vec<FeaturesPerSplit>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            n_trees: vec![100],
            max_depth: vec![MaxDepth::limit(6), MaxDepth::limit(10), MaxDepth::UNLIMITED],
            min_samples_split: vec![2, 10],
            features_per_split: vec![FeaturesPerSplit::Sqrt],
        }
    }
}

impl GridSpec {
    pub fn single(cfg: &ForestConfig) -> Self {
        Self {
            n_trees: vec![cfg.n_trees],
            max_depth: vec![cfg.max_depth],
            min_samples_split: vec![cfg.min_samples_split],
            features_per_split: vec![cfg.features_per_split],
        }
    }

    /// All cells, with the remaining fields taken from `base`.
    pub fn cells(&self, base: &ForestConfig) -> Vec<ForestConfig> {
        let mut out = Vec::new();
        for &n_trees in &self.n_trees {
            for &max_depth in &self.max_depth {
                for &min_samples_split in &self.min_samples_split {
                    for &features_per_split in &self.features_per_split {
                        out.push(ForestConfig {
                            n_trees,
                            max_depth,
                            min_samples_split,
                            features_per_split,
                            ..base.clone()
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellScore {
    pub config: ForestConfig,
    pub fold_scores: Vec<f64>,
    pub mean: f64,
}

/// SMOTE provenance for one fold, with indices mapped back to input rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSmoteAudit {
    pub fold: usize,
    pub synthetic: Vec<SyntheticProvenance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub metric: ScoreMetric,
    pub cells: Vec<CellScore>,
    /// Cell indices by descending mean; equal means keep enumeration order.
    pub ranking: Vec<usize>,
    pub best_index: usize,
    pub smote_audit: Vec<FoldSmoteAudit>,
}

impl CvResult {
    pub fn best_cell(&self) -> &ForestConfig {
        &self.cells[self.best_index].config
    }

    /// One row per cell: hyperparameters, per-fold scores, mean and rank.
    pub fn to_csv(&self) -> String {
        let k = self.cells.first().map_or(0, |c| c.fold_scores.len());
        let mut out =
            String::from("cell,n_trees,max_depth,min_samples_split,features_per_split");
        for f in 0..k {
            out.push_str(&format!(",fold_{f}"));
        }
        out.push_str(",mean,rank\n");
        let mut rank = vec![0usize; self.cells.len()];
        for (r, &c) in self.ranking.iter().enumerate() {
            rank[c] = r + 1;
        }
        for (i, cell) in self.cells.iter().enumerate() {
            let c = &cell.config;
            out.push_str(&format!(
                "{i},{},{},{},{}",
                c.n_trees, c.max_depth, c.min_samples_split, c.features_per_split
            ));
            for s in &cell.fold_scores {
                out.push_str(&format!(",{s}"));
            }
            out.push_str(&format!(",{},{}\n", cell.mean, rank[i]));
        }
        out
    }
}

struct FoldData {
    x: ndarray::Array2<f64>,
    y: Vec<u8>,
    held_out: Vec<usize>,
}

fn score(
    metric: ScoreMetric,
    model: &crate::forest::ForestModel,
    x: ArrayView2<f64>,
    y: &[u8],
) -> Result<f64> {
    match metric {
        ScoreMetric::Accuracy => {
            let pred = model.predict_batch(x)?;
            let hits = pred.iter().zip(y).filter(|(p, t)| p == t).count();
            Ok(hits as f64 / y.len() as f64)
        }
        ScoreMetric::Auc => Ok(roc_auc(y, &model.predict_proba_batch(x)?)?.auc),
    }
}

/// Evaluate every grid cell on every fold. When `smote_cfg` is given, SMOTE
/// runs on each fold's training rows only, seeded per fold.
pub fn grid_search(
    x: ArrayView2<f64>,
    y: &[u8],
    grid: &GridSpec,
    base: &ForestConfig,
    folds: &FoldPlan,
    smote_cfg: Option<&SmoteConfig>,
    metric: ScoreMetric,
) -> Result<CvResult> {
    if folds.assignment.len() != y.len() || x.nrows() != y.len() {
        return Err(Error::Shape(format!(
            "fold plan covers {} rows, matrix has {}, labels {}",
            folds.assignment.len(),
            x.nrows(),
            y.len()
        )));
    }
    let cells = grid.cells(base);
    if cells.is_empty() {
        return Err(Error::Parameter("grid has no cells".into()));
    }
    let names: Vec<String> = (0..x.ncols()).map(|j| format!("c{j}")).collect();

    let mut audit = Vec::new();
    let mut fold_data = Vec::with_capacity(folds.k);
    for f in 0..folds.k {
        let train = folds.training(f);
        let tx = x.select(Axis(0), &train);
        let ty: Vec<u8> = train.iter().map(|&i| y[i]).collect();
        let (tx, ty) = match smote_cfg {
            Some(cfg) => {
                let fold_cfg = SmoteConfig {
                    seed: derive_seed(cfg.seed, "fold", f as u64),
                    ..cfg.clone()
                };
                let out = smote(tx.view(), &ty, &fold_cfg).map_err(|e| Error::Fold {
                    cell: 0,
                    fold: f,
                    source: Box::new(e),
                })?;
                audit.push(FoldSmoteAudit {
                    fold: f,
                    synthetic: out
                        .provenance
                        .iter()
                        .map(|p| SyntheticProvenance {
                            base: train[p.base],
                            neighbor: train[p.neighbor],
                            interp: p.interp,
                        })
                        .collect(),
                });
                (out.x, out.y)
            }
            None => (tx, ty),
        };
        fold_data.push(FoldData {
            x: tx,
            y: ty,
            held_out: folds.held_out(f),
        });
    }

    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..folds.k).map(move |f| (c, f)))
        .collect();
    let scores: Vec<f64> = jobs
        .par_iter()
        .map(|&(c, f)| {
            let fd = &fold_data[f];
            let wrap = |e: Error| Error::Fold {
                cell: c,
                fold: f,
                source: Box::new(e),
            };
            let model = fit_forest(fd.x.view(), &fd.y, &cells[c], names.clone()).map_err(wrap)?;
            let hx = x.select(Axis(0), &fd.held_out);
            let hy: Vec<u8> = fd.held_out.iter().map(|&i| y[i]).collect();
            score(metric, &model, hx.view(), &hy).map_err(wrap)
        })
        .collect::<Result<_>>()?;

    let cell_scores: Vec<CellScore> = cells
        .into_iter()
        .enumerate()
        .map(|(c, config)| {
            let fold_scores = scores[c * folds.k..(c + 1) * folds.k].to_vec();
            let mean = fold_scores.iter().sum::<f64>() / folds.k as f64;
            CellScore {
                config,
                fold_scores,
                mean,
            }
        })
        .collect();
    let mut ranking: Vec<usize> = (0..cell_scores.len()).collect();
    ranking.sort_by(|&a, &b| cell_scores[b].mean.total_cmp(&cell_scores[a].mean));
    Ok(CvResult {
        metric,
        best_index: ranking[0],
        ranking,
        cells: cell_scores,
        smote_audit: audit,
    })
}

/// Per-fold scores of a single configuration.
pub fn cross_validate(
    x: ArrayView2<f64>,
    y: &[u8],
    cfg: &ForestConfig,
    folds: &FoldPlan,
    smote_cfg: Option<&SmoteConfig>,
    metric: ScoreMetric,
) -> Result<CellScore> {
    let mut result = grid_search(x, y, &GridSpec::single(cfg), cfg, folds, smote_cfg, metric)?;
    Ok(result.cells.swap_remove(0))
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use ndarray::Array2;
    use proptest::prelude::*;
    use rand::Rng;

    use super::*;
    use crate::seed::rng_from_seed;

    fn fold_counts(plan: &FoldPlan, y: &[u8]) -> Vec<(usize, usize)> {
        (0..plan.k)
            .map(|f| {
                let rows = plan.held_out(f);
                let pos = rows.iter().filter(|&&i| y[i] == 1).count();
                (pos, rows.len() - pos)
            })
            .collect()
    }

    #[test]
    fn exact_divisibility() {
        let y = [1, 1, 1, 1, 1, 0, 0, 0, 0, 0];
        let plan = stratified_kfold(&y, 5, 3).unwrap();
        assert!(fold_counts(&plan, &y).iter().all(|&c| c == (1, 1)));

        let y = [1, 1, 1, 1, 1, 1, 0, 0, 0, 0];
        let plan = stratified_kfold(&y, 2, 3).unwrap();
        assert_eq!(fold_counts(&plan, &y), vec![(3, 2), (3, 2)]);
    }

    #[test]
    fn too_few_members_for_k() {
        let y = [1, 1, 1, 0, 0, 0, 0, 0, 0, 0];
        assert!(matches!(stratified_kfold(&y, 5, 0), Err(Error::Stratification(_))));
    }

    fn toy(seed: u64, n: usize) -> (Array2<f64>, Vec<u8>) {
        let mut rng = rng_from_seed(seed);
        let x = Array2::from_shape_fn((n, 3), |_| rng.random::<f64>());
        let y = x
            .rows()
            .into_iter()
            .map(|r| u8::from(r[0] + r[1] > 1.2))
            .collect();
        (x, y)
    }

    #[test]
    fn singleton_grid_is_best() {
        let (x, y) = toy(1, 80);
        let base = ForestConfig {
            n_trees: 5,
            ..Default::default()
        };
        let folds = stratified_kfold(&y, 5, 1).unwrap();
        let r = grid_search(x.view(), &y, &GridSpec::single(&base), &base, &folds, None, ScoreMetric::Accuracy)
            .unwrap();
        assert_eq!(r.cells.len(), 1);
        assert_eq!(r.best_index, 0);
        assert_eq!(r.best_cell(), &base);
    }

    #[test]
    fn equal_means_keep_enumeration_order() {
        let (x, y) = toy(2, 60);
        let base = ForestConfig {
            n_trees: 3,
            ..Default::default()
        };
        // identical cells give bitwise-identical scores
        let grid = GridSpec {
            n_trees: vec![3, 3],
            ..GridSpec::single(&base)
        };
        let folds = stratified_kfold(&y, 3, 2).unwrap();
        let r = grid_search(x.view(), &y, &grid, &base, &folds, None, ScoreMetric::Accuracy).unwrap();
        assert_eq!(r.cells[0].mean.to_bits(), r.cells[1].mean.to_bits());
        assert_eq!(r.best_index, 0);
        assert_eq!(r.ranking, vec![0, 1]);
    }

    #[test]
    fn smote_never_uses_held_out_rows() {
        let (x, mut y) = toy(3, 90);
        // make class 1 a clear minority
        for (i, l) in y.iter_mut().enumerate() {
            if i % 3 != 0 {
                *l = 0;
            }
        }
        let base = ForestConfig {
            n_trees: 3,
            ..Default::default()
        };
        let folds = stratified_kfold(&y, 3, 5).unwrap();
        let r = grid_search(
            x.view(),
            &y,
            &GridSpec::single(&base),
            &base,
            &folds,
            Some(&SmoteConfig { k_neighbors: 3, ..Default::default() }),
            ScoreMetric::Auc,
        )
        .unwrap();
        assert_eq!(r.smote_audit.len(), 3);
        for a in &r.smote_audit {
            assert!(!a.synthetic.is_empty());
            let held: HashSet<usize> = folds.held_out(a.fold).into_iter().collect();
            for p in &a.synthetic {
                assert!(!held.contains(&p.base) && !held.contains(&p.neighbor));
                assert_eq!((y[p.base], y[p.neighbor]), (1, 1));
            }
        }
        let csv = r.to_csv();
        assert!(csv.starts_with("cell,n_trees,max_depth,min_samples_split,features_per_split,fold_0,fold_1,fold_2,mean,rank\n"));
    }

    #[test]
    fn grid_enumeration_is_row_major() {
        let grid = GridSpec {
            n_trees: vec![1, 2],
            max_depth: vec![MaxDepth::limit(1), MaxDepth::UNLIMITED],
            min_samples_split: vec![2],
            features_per_split: vec![FeaturesPerSplit::Sqrt],
        };
        let cells = grid.cells(&ForestConfig::default());
        let pairs: Vec<(usize, MaxDepth)> = cells.iter().map(|c| (c.n_trees, c.max_depth)).collect();
        assert_eq!(
            pairs,
            vec![
                (1, MaxDepth::limit(1)),
                (1, MaxDepth::UNLIMITED),
                (2, MaxDepth::limit(1)),
                (2, MaxDepth::UNLIMITED)
            ]
        );
    }

    proptest! {
        #[test]
        fn fold_invariants(y in prop::collection::vec(0u8..2, 20..300), k in prop::sample::select(vec![2usize, 5, 10]), seed in any::<u64>()) {
            let n_pos = y.iter().filter(|&&l| l == 1).count();
            prop_assume!(n_pos >= k && y.len() - n_pos >= k);
            let plan = stratified_kfold(&y, k, seed).unwrap();
            let counts = fold_counts(&plan, &y);
            let ideal = n_pos as f64 / k as f64;
            let sizes: Vec<usize> = counts.iter().map(|(p, n)| p + n).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            for (p, _) in &counts {
                prop_assert!((*p as f64 - ideal).abs() < 1.0);
            }
            prop_assert_eq!(sizes.iter().sum::<usize>(), y.len());
        }
    }
}
