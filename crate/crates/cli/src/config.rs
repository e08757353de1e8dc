//! Pipeline configuration.
//!
//! Configs are TOML. Every section is optional and falls back to the defaults
//! below; `riskforest pipeline --print-config` prints the fully resolved form.
//!
//! ```toml
//! seed = 42                 # root of every derived random stream
//! train_fraction = 0.8
//! order = "default"         # or "paper": fit preprocessing + selection before the split
//! output_dir = "runs/demo"
//! label_column = "died"
//!
//! [input]                   # either csv + schema ...
//! csv = "data.csv"
//! schema = "schema.toml"
//! [input.synthetic]         # ... or a synthetic dataset
//! n_rows = 5000
//!
//! [stages]                  # toggles, all on by default
//! lasso = true
//! rfe = true
//! smote = true
//! grid_search = true
//! explain = true
//! ```
//!
//! Seeds are never configured per stage. Each stage draws from
//! `derive_seed(seed, <stage name>, 0)`; the train/test split uses `seed`
//! itself.

use std::path::{Path, PathBuf};

use riskforest_core::forest::{FeaturesPerSplit, ForestConfig, MaxDepth};
use riskforest_core::seed::derive_seed;
use riskforest_core::tuning::{GridSpec, ScoreMetric};
use riskforest_core::SmoteConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::synth::SyntheticSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageOrder {
    /// Preprocessing and selection are fitted on the training split only.
    #[default]
    Default,
    /// Preprocessing and selection are fitted on all rows before splitting.
    Paper,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schema: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StageToggles {
    pub lasso: bool,
    pub rfe: bool,
    pub smote: bool,
    pub grid_search: bool,
    pub explain: bool,
}

impl Default for StageToggles {
    fn default() -> Self {
        Self {
            lasso: true,
            rfe: true,
            smote: true,
            grid_search: true,
            explain: true,
        }
    }
}

impl StageToggles {
    pub const NONE: StageToggles = StageToggles {
        lasso: false,
        rfe: false,
        smote: false,
        grid_search: false,
        explain: false,
    };

    /// Enabled optional stages in execution order.
    pub fn enabled(&self) -> Vec<&'static str> {
        [
            ("lasso", self.lasso),
            ("rfe", self.rfe),
            ("smote", self.smote),
            ("grid_search", self.grid_search),
            ("explain", self.explain),
        ]
        .into_iter()
        .filter(|(_, on)| *on)
        .map(|(name, _)| name)
        .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LassoParams {
    /// Fixed penalty. When absent, a log-spaced grid from `lambda_max` down to
    /// `lambda_max / grid_ratio` is scored by cross-validated accuracy of the
    /// selection forest. The objective is not averaged over rows, so useful
    /// values scale with the number of training rows.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub grid_points: usize,
    pub grid_ratio: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub threshold: f64,
}

impl Default for LassoParams {
    fn default() -> Self {
        Self {
            lambda: None,
            grid_points: 20,
            grid_ratio: 1000.0,
            max_iter: 10_000,
            tol: 1e-8,
            threshold: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RfeParams {
    pub target_count: usize,
    pub step: usize,
    pub cv_folds: usize,
}

impl Default for RfeParams {
    fn default() -> Self {
        Self {
            target_count: 10,
            step: 1,
            cv_folds: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoteParams {
    pub k_neighbors: usize,
    pub target_ratio: f64,
    /// Write `smote_audit.csv` with (base, neighbor, interp) per synthetic row.
    pub audit: bool,
}

impl Default for SmoteParams {
    fn default() -> Self {
        Self {
            k_neighbors: 5,
            target_ratio: 1.0,
            audit: false,
        }
    }
}

impl SmoteParams {
    pub fn to_config(&self, seed: u64) -> SmoteConfig {
        SmoteConfig {
            k_neighbors: self.k_neighbors,
            target_ratio: self.target_ratio,
            seed,
        }
    }
}

/// Forest hyperparameters; the seed comes from the pipeline seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: MaxDepth,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub features_per_split: FeaturesPerSplit,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: MaxDepth::UNLIMITED,
            min_samples_split: 2,
            min_samples_leaf: 1,
            features_per_split: FeaturesPerSplit::Sqrt,
        }
    }
}

impl ForestParams {
    pub fn to_config(&self, seed: u64) -> ForestConfig {
        ForestConfig {
            n_trees: self.n_trees,
            max_depth: self.max_depth,
            min_samples_split: self.min_samples_split,
            min_samples_leaf: self.min_samples_leaf,
            features_per_split: self.features_per_split,
            seed,
        }
    }

    /// Smaller forest used to score LASSO penalties and drive RFE.
    pub fn selection_default() -> Self {
        Self {
            n_trees: 25,
            max_depth: MaxDepth::limit(10),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridParams {
    pub n_trees: Vec<usize>,
    pub max_depth: Vec<MaxDepth>,
    pub min_samples_split: Vec<usize>,
    pub features_per_split: Vec<FeaturesPerSplit>,
    pub cv_folds: usize,
    pub metric: ScoreMetric,
}

impl Default for GridParams {
    fn default() -> Self {
        let g = GridSpec::default();
        Self {
            n_trees: g.n_trees,
            max_depth: g.max_depth,
            min_samples_split: g.min_samples_split,
            features_per_split: g.features_per_split,
            cv_folds: 5,
            metric: ScoreMetric::Accuracy,
        }
    }
}

impl GridParams {
    pub fn spec(&self) -> GridSpec {
        GridSpec {
            n_trees: self.n_trees.clone(),
            max_depth: self.max_depth.clone(),
            min_samples_split: self.min_samples_split.clone(),
            features_per_split: self.features_per_split.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainParams {
    /// Training rows sampled as the interventional background.
    pub background: usize,
    /// Test rows explained (taken in split order).
    pub instances: usize,
    pub exact_limit: usize,
    /// Permutations per instance when the width exceeds `exact_limit`.
    pub permutations: usize,
}

impl Default for ExplainParams {
    fn default() -> Self {
        Self {
            background: 100,
            instances: 10,
            exact_limit: 15,
            permutations: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub train_fraction: f64,
    pub order: StageOrder,
    pub output_dir: PathBuf,
    pub label_column: String,
    pub input: InputConfig,
    pub stages: StageToggles,
    pub lasso: LassoParams,
    pub rfe: RfeParams,
    pub smote: SmoteParams,
    pub forest: ForestParams,
    pub selection_forest: ForestParams,
    pub grid: GridParams,
    pub explain: ExplainParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            train_fraction: 0.8,
            order: StageOrder::Default,
            output_dir: PathBuf::from("runs/default"),
            label_column: crate::synth::LABEL_COLUMN.to_string(),
            input: InputConfig::default(),
            stages: StageToggles::default(),
            lasso: LassoParams::default(),
            rfe: RfeParams::default(),
            smote: SmoteParams::default(),
            forest: ForestParams::default(),
            selection_forest: ForestParams::selection_default(),
            grid: GridParams::default(),
            explain: ExplainParams::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        let mut cfg = Self::from_toml(&text)?;
        // relative input paths are resolved against the config file
        if let Some(dir) = path.parent() {
            for p in [&mut cfg.input.csv, &mut cfg.input.schema].into_iter().flatten() {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("pipeline config is always representable as TOML")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("train_fraction {} must lie in (0, 1)", self.train_fraction));
        }
        match (&self.input.csv, &self.input.schema, &self.input.synthetic) {
            (Some(_), Some(_), None) | (None, None, _) => {}
            (Some(_), None, _) => return bad("input.csv requires input.schema".into()),
            (None, Some(_), _) => return bad("input.schema given without input.csv".into()),
            (Some(_), Some(_), Some(_)) => {
                return bad("give either input.csv or input.synthetic, not both".into())
            }
        }
        if let Some(spec) = &self.input.synthetic {
            spec.validate()?;
        }
        if self.lasso.lambda.is_some_and(|l| !(l >= 0.0 && l.is_finite())) {
            return bad("lasso.lambda must be a finite value >= 0".into());
        }
        if self.lasso.grid_points == 0 || self.lasso.grid_ratio.is_nan() || self.lasso.grid_ratio < 1.0 {
            return bad("lasso.grid_points must be >= 1 and lasso.grid_ratio >= 1".into());
        }
        if self.rfe.target_count == 0 || self.rfe.step == 0 || self.rfe.cv_folds < 2 {
            return bad("rfe needs target_count >= 1, step >= 1 and cv_folds >= 2".into());
        }
        if self.grid.cv_folds < 2 {
            return bad("grid.cv_folds must be at least 2".into());
        }
        let g = &self.grid;
        if g.n_trees.is_empty()
            || g.max_depth.is_empty()
            || g.min_samples_split.is_empty()
            || g.features_per_split.is_empty()
        {
            return bad("every grid list needs at least one value".into());
        }
        if self.explain.background == 0 || self.explain.permutations == 0 {
            return bad("explain.background and explain.permutations must be positive".into());
        }
        self.smote
            .to_config(0)
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        for f in [&self.forest, &self.selection_forest] {
            f.to_config(0)
                .validate()
                .map_err(|e| CliError::Config(e.to_string()))?;
        }
        for cell in g.spec().cells(&self.forest.to_config(0)) {
            cell.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn stage_seed(&self, stage: &str) -> u64 {
        derive_seed(self.seed, stage, 0)
    }

    pub fn synthetic_spec(&self) -> SyntheticSpec {
        self.input.synthetic.clone().unwrap_or_default()
    }
}
