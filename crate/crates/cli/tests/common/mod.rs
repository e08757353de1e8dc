#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::Path;

use riskforest_cli::config::{ExplainParams, ForestParams, GridParams, PipelineConfig, RfeParams};
use riskforest_cli::SyntheticSpec;
use riskforest_core::MaxDepth;

/// A pipeline config small enough to run in a second or two.
pub fn small_config(dir: &Path) -> PipelineConfig {
    let small_forest = ForestParams {
        n_trees: 15,
        max_depth: MaxDepth::limit(8),
        ..ForestParams::default()
    };
    PipelineConfig {
        output_dir: dir.to_path_buf(),
        input: riskforest_cli::config::InputConfig {
            synthetic: Some(SyntheticSpec {
                n_rows: 500,
                ..SyntheticSpec::default()
            }),
            ..Default::default()
        },
        forest: small_forest.clone(),
        selection_forest: ForestParams { n_trees: 8, ..small_forest },
        rfe: RfeParams { target_count: 8, ..RfeParams::default() },
        grid: GridParams {
            n_trees: vec![15],
            max_depth: vec![MaxDepth::limit(4), MaxDepth::limit(8)],
            min_samples_split: vec![2],
            cv_folds: 3,
            ..GridParams::default()
        },
        explain: ExplainParams {
            background: 15,
            instances: 3,
            ..ExplainParams::default()
        },
        ..PipelineConfig::default()
    }
}

pub fn files_in(dir: &Path) -> BTreeSet<String> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect()
}
