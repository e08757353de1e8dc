use ndarray::ArrayView2;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ForestConfig, MIN_IMPURITY_DECREASE};
use crate::error::{Error, Result};

/// Gini impurity `1 - sum_k p_k^2` of a two-class count vector.
pub fn gini(counts: [usize; 2]) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let p0 = counts[0] as f64 / n;
    let p1 = counts[1] as f64 / n;
    1.0 - p0 * p0 - p1 * p1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        n_samples: usize,
        impurity_decrease: f64,
    },
    Leaf {
        counts: [usize; 2],
    },
}

/// A fitted tree stored as a flat node array; the root is `nodes[0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub n_features: usize,
    pub n_samples: usize,
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { .. } => return i,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn leaf_counts(&self, row: &[f64]) -> [usize; 2] {
        match self.nodes[self.leaf_index(row)] {
            TreeNode::Leaf { counts } => counts,
            TreeNode::Split { .. } => unreachable!("leaf_index always stops at a leaf"),
        }
    }

    /// Positive-class fraction of the leaf reached by `row`.
    pub fn proba(&self, row: &[f64]) -> f64 {
        let [c0, c1] = self.leaf_counts(row);
        c1 as f64 / (c0 + c1) as f64
    }

    /// Majority class of the leaf reached by `row`; ties vote 0.
    pub fn vote(&self, row: &[f64]) -> u8 {
        let [c0, c1] = self.leaf_counts(row);
        u8::from(c1 > c0)
    }

    pub fn n_splits(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Split { .. }))
            .count()
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match t.nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }

    /// Per-column sum of `(node samples / root samples) * impurity decrease`.
    pub fn importance(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_features];
        for node in &self.nodes {
            if let TreeNode::Split {
                feature,
                n_samples,
                impurity_decrease,
                ..
            } = node
            {
                out[*feature] += (*n_samples as f64 / self.n_samples as f64) * impurity_decrease;
            }
        }
        out
    }
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    decrease: f64,
}

fn class_counts(y: &[u8], idx: &[usize]) -> [usize; 2] {
    let ones = idx.iter().filter(|&&i| y[i] == 1).count();
    [idx.len() - ones, ones]
}

fn find_split<R: Rng>(
    x: &ArrayView2<f64>,
    y: &[u8],
    idx: &[usize],
    counts: [usize; 2],
    cfg: &ForestConfig,
    rng: &mut R,
) -> Option<BestSplit> {
    let p = x.ncols();
    let k = cfg.features_per_split.resolve(p);
    let mut candidates: Vec<usize> = if k >= p {
        (0..p).collect()
    } else {
        sample(rng, p, k).into_vec()
    };
    candidates.sort_unstable();

    let n = idx.len();
    let parent = gini(counts);
    let mut best: Option<BestSplit> = None;
    let mut column: Vec<(f64, u8)> = Vec::with_capacity(n);
    for &f in &candidates {
        column.clear();
        column.extend(idx.iter().map(|&i| (x[[i, f]], y[i])));
        column.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let mut left = [0usize; 2];
        for pos in 0..n - 1 {
            left[column[pos].1 as usize] += 1;
            let (lo, hi) = (column[pos].0, column[pos + 1].0);
            if lo == hi {
                continue;
            }
            let n_left = pos + 1;
            let n_right = n - n_left;
            if n_left < cfg.min_samples_leaf || n_right < cfg.min_samples_leaf {
                continue;
            }
            let right = [counts[0] - left[0], counts[1] - left[1]];
            let decrease = parent
                - (n_left as f64 / n as f64) * gini(left)
                - (n_right as f64 / n as f64) * gini(right);
            if decrease > MIN_IMPURITY_DECREASE && best.as_ref().is_none_or(|b| decrease > b.decrease)
            {
                let mid = lo + (hi - lo) / 2.0;
                // adjacent floats: keep `hi` on the right
                let threshold = if mid < hi { mid } else { lo };
                best = Some(BestSplit {
                    feature: f,
                    threshold,
                    decrease,
                });
            }
        }
    }
    best
}

/// Grow a tree on the given sample of row indices (duplicates allowed).
pub fn fit_tree_on_sample<R: Rng>(
    x: ArrayView2<f64>,
    y: &[u8],
    sample_idx: Vec<usize>,
    cfg: &ForestConfig,
    rng: &mut R,
) -> Result<Tree> {
    if sample_idx.is_empty() || x.nrows() == 0 {
        return Err(Error::Size("cannot fit a tree on zero rows".into()));
    }
    if x.nrows() != y.len() {
        return Err(Error::Shape(format!("{} rows but {} labels", x.nrows(), y.len())));
    }
    if let Some(bad) = y.iter().find(|&&l| l > 1) {
        return Err(Error::Class(format!("label {bad} is not binary")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("design matrix contains non-finite values".into()));
    }
    cfg.validate()?;

    let n_samples = sample_idx.len();
    let mut nodes = vec![TreeNode::Leaf { counts: [0, 0] }];
    let mut stack = vec![(0usize, sample_idx, 0usize)];
    while let Some((slot, idx, depth)) = stack.pop() {
        let counts = class_counts(y, &idx);
        let stop = cfg.max_depth.reached(depth)
            || idx.len() < cfg.min_samples_split
            || counts[0] == 0
            || counts[1] == 0;
        let split = if stop {
            None
        } else {
            find_split(&x, y, &idx, counts, cfg, rng)
        };
        match split {
            None => nodes[slot] = TreeNode::Leaf { counts },
            Some(s) => {
                let (l, r): (Vec<usize>, Vec<usize>) = idx
                    .iter()
                    .partition(|&&i| x[[i, s.feature]] <= s.threshold);
                let left = nodes.len();
                let right = left + 1;
                nodes.push(TreeNode::Leaf { counts: [0, 0] });
                nodes.push(TreeNode::Leaf { counts: [0, 0] });
                nodes[slot] = TreeNode::Split {
                    feature: s.feature,
                    threshold: s.threshold,
                    left,
                    right,
                    n_samples: idx.len(),
                    impurity_decrease: s.decrease,
                };
                stack.push((right, r, depth + 1));
                stack.push((left, l, depth + 1));
            }
        }
    }
    Ok(Tree {
        n_features: x.ncols(),
        n_samples,
        nodes,
    })
}

/// Grow a tree on every row of `x` (no bootstrap).
pub fn fit_tree<R: Rng>(
    x: ArrayView2<f64>,
    y: &[u8],
    cfg: &ForestConfig,
    rng: &mut R,
) -> Result<Tree> {
    let all = (0..x.nrows()).collect();
    fit_tree_on_sample(x, y, all, cfg, rng)
}
