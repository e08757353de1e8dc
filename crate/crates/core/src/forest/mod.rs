//! CART classification trees and bagged random forests.
//!
//! Trees split on Gini impurity decrease with candidate thresholds at the
//! midpoints of consecutive distinct values. Values `<= threshold` go left.
//! Every tie (best split, leaf class, ensemble vote) resolves toward the lower
//! index or class 0.

mod config;
mod model;
mod tree;

pub use config::{FeaturesPerSplit, ForestConfig, MaxDepth};
pub use model::{feature_importance, fit_forest, ForestModel};
pub use tree::{fit_tree, fit_tree_on_sample, gini, Tree, TreeNode};

/// Smallest impurity decrease accepted as a split.
pub const MIN_IMPURITY_DECREASE: f64 = 1e-12;
