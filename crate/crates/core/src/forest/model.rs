use ndarray::ArrayView2;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_tree_on_sample, ForestConfig, Tree};
use crate::error::{Error, Result};
use crate::seed::stage_rng;

/// Bagged ensemble of CART trees.
///
/// Serializes to JSON with the config, column names, per-tree flat node arrays
/// and bootstrap indices. Floats round-trip exactly, so a reloaded model
/// predicts bit-identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub config: ForestConfig,
    pub column_names: Vec<String>,
    pub trees: Vec<Tree>,
    pub bootstrap_indices: Vec<Vec<usize>>,
}

/// Train `cfg.n_trees` trees, each on its own bootstrap sample.
///
/// Tree `i` draws from the stream `derive_seed(cfg.seed, "tree", i)`, so the
/// model does not depend on how rayon schedules the work.
pub fn fit_forest(
    x: ArrayView2<f64>,
    y: &[u8],
    cfg: &ForestConfig,
    column_names: Vec<String>,
) -> Result<ForestModel> {
    cfg.validate()?;
    let n = x.nrows();
    if n == 0 {
        return Err(Error::Size("cannot fit a forest on zero rows".into()));
    }
    if column_names.len() != x.ncols() {
        return Err(Error::Shape(format!(
            "{} column names for {} columns",
            column_names.len(),
            x.ncols()
        )));
    }
    let fitted: Vec<(Tree, Vec<usize>)> = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = stage_rng(cfg.seed, "tree", t as u64);
            let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let tree = fit_tree_on_sample(x, y, sample.clone(), cfg, &mut rng)?;
            Ok((tree, sample))
        })
        .collect::<Result<_>>()?;
    let (trees, bootstrap_indices) = fitted.into_iter().unzip();
    Ok(ForestModel {
        config: cfg.clone(),
        column_names,
        trees,
        bootstrap_indices,
    })
}

impl ForestModel {
    pub fn n_features(&self) -> usize {
        self.column_names.len()
    }

    fn check_width(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.n_features() {
            return Err(Error::Shape(format!(
                "row has {} values, model expects {}",
                row.len(),
                self.n_features()
            )));
        }
        Ok(())
    }

    /// Mean over trees of the leaf positive-class fraction.
    pub fn predict_proba(&self, row: &[f64]) -> Result<f64> {
        self.check_width(row)?;
        Ok(self.proba_unchecked(row))
    }

    pub(crate) fn proba_unchecked(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.proba(row)).sum::<f64>() / self.trees.len() as f64
    }

    /// Per-tree hard votes.
    pub fn tree_votes(&self, row: &[f64]) -> Result<Vec<u8>> {
        self.check_width(row)?;
        Ok(self.trees.iter().map(|t| t.vote(row)).collect())
    }

    /// Majority vote over trees: 1 iff strictly more than half the trees vote 1.
    pub fn predict(&self, row: &[f64]) -> Result<u8> {
        let ones = self.tree_votes(row)?.iter().filter(|&&v| v == 1).count();
        Ok(u8::from(2 * ones > self.trees.len()))
    }

    pub fn predict_proba_batch(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        x.rows()
            .into_iter()
            .map(|r| match r.as_slice() {
                Some(row) => self.predict_proba(row),
                None => self.predict_proba(&r.to_vec()),
            })
            .collect()
    }

    pub fn predict_batch(&self, x: ArrayView2<f64>) -> Result<Vec<u8>> {
        x.rows()
            .into_iter()
            .map(|r| match r.as_slice() {
                Some(row) => self.predict(row),
                None => self.predict(&r.to_vec()),
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Impurity-based importance: per-tree weighted decreases, averaged over
/// trees, normalized to sum to one when any split exists.
pub fn feature_importance(m: &ForestModel) -> Vec<f64> {
    let p = m.n_features();
    let mut total = vec![0.0; p];
    for tree in &m.trees {
        for (acc, v) in total.iter_mut().zip(tree.importance()) {
            *acc += v;
        }
    }
    let n_trees = m.trees.len() as f64;
    total.iter_mut().for_each(|v| *v /= n_trees);
    let sum: f64 = total.iter().sum();
    if sum > 0.0 {
        total.iter_mut().for_each(|v| *v /= sum);
    }
    total
}

#[cfg(test)]
mod tests {
    use ndarray::{array, Array2};
    use proptest::prelude::*;
    use rand::Rng;

    use super::*;
    use crate::forest::{FeaturesPerSplit, MaxDepth, TreeNode};
    use crate::seed::rng_from_seed;

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|i| format!("x{i}")).collect()
    }

    fn leaf_tree(counts: [usize; 2]) -> Tree {
        Tree {
            n_features: 1,
            n_samples: counts[0] + counts[1],
            nodes: vec![TreeNode::Leaf { counts }],
        }
    }

    fn handmade(trees: Vec<Tree>) -> ForestModel {
        let n = trees.len();
        ForestModel {
            config: ForestConfig {
                n_trees: n,
                ..Default::default()
            },
            column_names: names(1),
            trees,
            bootstrap_indices: vec![vec![]; n],
        }
    }

    #[test]
    fn proba_is_mean_leaf_fraction() {
        let m = handmade(vec![leaf_tree([0, 2]), leaf_tree([0, 5]), leaf_tree([4, 0])]);
        assert!((m.predict_proba(&[0.0]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        let m = handmade(vec![leaf_tree([3, 1])]);
        assert_eq!(m.predict_proba(&[0.0]).unwrap(), 0.25);
    }

    #[test]
    fn width_mismatch_is_a_shape_error() {
        let m = handmade(vec![leaf_tree([1, 1])]);
        assert!(matches!(m.predict_proba(&[]), Err(Error::Shape(_))));
        assert!(matches!(m.predict(&[1.0, 2.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn vote_rules() {
        let m = handmade(vec![leaf_tree([0, 1]), leaf_tree([0, 1]), leaf_tree([1, 0])]);
        assert_eq!(m.predict(&[0.0]).unwrap(), 1);
        let m = handmade(vec![leaf_tree([0, 1]), leaf_tree([1, 0])]);
        assert_eq!(m.predict(&[0.0]).unwrap(), 0);
        let m = handmade(vec![leaf_tree([1, 0]), leaf_tree([2, 0])]);
        assert_eq!(m.predict(&[0.0]).unwrap(), 0);
        // leaf tie votes 0
        let m = handmade(vec![leaf_tree([2, 2])]);
        assert_eq!(m.predict(&[0.0]).unwrap(), 0);
    }

    #[test]
    fn hard_vote_and_mean_probability_can_disagree() {
        // votes 1,1,0 but probabilities 0.6, 0.6, 0.0 -> mean 0.4
        let m = handmade(vec![leaf_tree([2, 3]), leaf_tree([2, 3]), leaf_tree([5, 0])]);
        assert_eq!(m.predict(&[0.0]).unwrap(), 1);
        assert!(m.predict_proba(&[0.0]).unwrap() < 0.5);
    }

    fn random_data(seed: u64, n: usize, p: usize) -> (Array2<f64>, Vec<u8>) {
        let mut rng = rng_from_seed(seed);
        let x = Array2::from_shape_fn((n, p), |_| rng.random::<f64>());
        let y = x
            .rows()
            .into_iter()
            .map(|r| u8::from(r[0] + 0.5 * r[1 % p] + 0.3 * rng.random::<f64>() > 0.9))
            .collect();
        (x, y)
    }

    #[test]
    fn single_tree_forest_matches_its_tree() {
        let (x, y) = random_data(1, 80, 3);
        let cfg = ForestConfig {
            n_trees: 1,
            ..Default::default()
        };
        let m = fit_forest(x.view(), &y, &cfg, names(3)).unwrap();
        for r in x.rows() {
            let row = r.to_vec();
            assert_eq!(m.predict(&row).unwrap(), m.trees[0].vote(&row));
            assert_eq!(m.predict_proba(&row).unwrap(), m.trees[0].proba(&row));
        }
    }

    #[test]
    fn same_seed_same_bootstrap() {
        let (x, y) = random_data(2, 60, 3);
        let cfg = ForestConfig {
            n_trees: 5,
            ..Default::default()
        };
        let a = fit_forest(x.view(), &y, &cfg, names(3)).unwrap();
        let b = fit_forest(x.view(), &y, &cfg, names(3)).unwrap();
        assert_eq!(a.bootstrap_indices, b.bootstrap_indices);
        assert_eq!(a, b);
        assert!(a.bootstrap_indices.iter().all(|s| s.len() == 60));
    }

    #[test]
    fn importance_of_leaf_only_forest_is_zero() {
        let x = array![[0.0, 1.0], [1.0, 0.0]];
        let m = fit_forest(x.view(), &[1, 1], &ForestConfig::default(), names(2)).unwrap();
        assert_eq!(feature_importance(&m), vec![0.0, 0.0]);
    }

    #[test]
    fn sole_split_column_gets_all_importance() {
        let tree = Tree {
            n_features: 4,
            n_samples: 4,
            nodes: vec![
                TreeNode::Split {
                    feature: 2,
                    threshold: 0.5,
                    left: 1,
                    right: 2,
                    n_samples: 4,
                    impurity_decrease: 0.5,
                },
                TreeNode::Leaf { counts: [2, 0] },
                TreeNode::Leaf { counts: [0, 2] },
            ],
        };
        let m = ForestModel {
            config: ForestConfig {
                n_trees: 1,
                ..Default::default()
            },
            column_names: names(4),
            trees: vec![tree],
            bootstrap_indices: vec![vec![]],
        };
        assert_eq!(feature_importance(&m), vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn bundle_round_trip_is_exact() {
        let (x, y) = random_data(3, 50, 4);
        let cfg = ForestConfig {
            n_trees: 4,
            max_depth: MaxDepth::limit(4),
            ..Default::default()
        };
        let m = fit_forest(x.view(), &y, &cfg, names(4)).unwrap();
        let back = ForestModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn recorded_splits_have_positive_decrease_and_consistent_routing(seed in any::<u64>()) {
            let (x, y) = random_data(seed, 60, 3);
            let cfg = ForestConfig { n_trees: 3, features_per_split: FeaturesPerSplit::All, seed, ..Default::default() };
            let m = fit_forest(x.view(), &y, &cfg, names(3)).unwrap();
            for t in &m.trees {
                for node in &t.nodes {
                    if let TreeNode::Split { impurity_decrease, .. } = node {
                        prop_assert!(*impurity_decrease > 0.0);
                    }
                }
                // every sample reaches exactly one leaf whose bounds it satisfies
                for r in x.rows() {
                    let row = r.to_vec();
                    let mut i = 0;
                    let mut path = 0;
                    while let TreeNode::Split { feature, threshold, left, right, .. } = t.nodes[i] {
                        i = if row[feature] <= threshold { left } else { right };
                        path += 1;
                        prop_assert!(path <= t.nodes.len());
                    }
                    prop_assert_eq!(i, t.leaf_index(&row));
                }
            }
            for r in x.rows() {
                let p = m.predict_proba(&r.to_vec()).unwrap();
                prop_assert!((0.0..=1.0).contains(&p));
            }
        }
    }
}
