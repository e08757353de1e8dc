//! Tabular risk-prediction toolkit.
//!
//! The crate is organised around the stages of a mortality-style prediction
//! pipeline: [`tabular`] ingestion and preprocessing, [`selection`] (LASSO and
//! recursive feature elimination), [`resample`] (SMOTE), [`forest`] (CART trees
//! and random forests), [`tuning`] (stratified k-fold and grid search),
//! [`metrics`] and [`explain`] (Shapley values).
//!
//! Everything that involves randomness takes an explicit `u64` seed; child
//! streams are derived with [`seed::derive_seed`] so each stage can be re-run
//! in isolation.

pub mod error;
pub mod explain;
pub mod forest;
pub mod metrics;
pub mod resample;
pub mod seed;
pub mod selection;
pub mod tabular;
pub mod tuning;

pub use error::{Error, Result};
pub use explain::{GlobalShapSummary, ShapExplanation, ShapMethod, ValueFunction};
pub use forest::{FeaturesPerSplit, ForestConfig, ForestModel, MaxDepth, Tree, TreeNode};
pub use metrics::{ClassificationMetrics, ConfusionMatrix, EvalReport, RocCurve};
pub use resample::{SmoteConfig, SmoteOutput, SyntheticProvenance};
pub use selection::{LassoModel, SelectionMethod, SelectionResult, SelectionStep};
pub use tabular::{
    Cell, Dataset, DesignMatrix, FeatureKind, FeatureSchema, FittedPreprocessor, SeriesWindow,
    SplitResult,
};
pub use tuning::{CvResult, FoldPlan, GridSpec, ScoreMetric};
