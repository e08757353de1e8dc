//! Ablation runs over the four optional-stage rows.
//!
//! Rows are cumulative in printed order: the bare forest, then SMOTE added,
//! then LASSO on top, then grid search on top. With `independent` each row
//! enables only its own stage. Every run uses the same seed and split and
//! writes its own run directory under `<output_dir>/<row slug>/`.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::Serialize;

use crate::config::{PipelineConfig, StageToggles};
use crate::error::{CliError, Result};
use crate::pipeline::run_pipeline;

pub const ABLATION_CSV: &str = "ablation.csv";
pub const ROW_LABELS: [&str; 4] = ["RandomForest", "w/ SMOTE", "w/ LASSO", "w/ Grid Search"];
const SLUGS: [&str; 4] = ["random_forest", "with_smote", "with_lasso", "with_grid_search"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub label: String,
    pub run_dir: PathBuf,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
    pub test_row_ids: Vec<String>,
}

impl AblationTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,precision,recall,f1,accuracy,auc\n");
        for r in &self.rows {
            writeln!(out, "{},{},{},{},{},{}", r.label, r.precision, r.recall, r.f1, r.accuracy, r.auc)
                .expect("writing to a String");
        }
        out
    }
}

/// Stage toggles for each row.
pub fn row_toggles(independent: bool) -> [StageToggles; 4] {
    let none = StageToggles::NONE;
    if independent {
        [
            none,
            StageToggles { smote: true, ..none },
            StageToggles { lasso: true, ..none },
            StageToggles { grid_search: true, ..none },
        ]
    } else {
        [
            none,
            StageToggles { smote: true, ..none },
            StageToggles { smote: true, lasso: true, ..none },
            StageToggles { smote: true, lasso: true, grid_search: true, ..none },
        ]
    }
}

pub fn run_ablation(cfg: &PipelineConfig, independent: bool) -> Result<AblationTable> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(4);
    let mut test_ids: Option<Vec<String>> = None;
    for ((label, slug), toggles) in ROW_LABELS.iter().zip(SLUGS).zip(row_toggles(independent)) {
        let run_cfg = PipelineConfig {
            stages: toggles,
            output_dir: cfg.output_dir.join(slug),
            ..cfg.clone()
        };
        let out = run_pipeline(&run_cfg)?;
        match &test_ids {
            None => test_ids = Some(out.manifest.test_row_ids.clone()),
            Some(ids) if *ids != out.manifest.test_row_ids => {
                return Err(CliError::Config(format!(
                    "ablation row `{label}` used a different test split"
                )))
            }
            Some(_) => {}
        }
        let r = &out.report;
        rows.push(AblationRow {
            label: label.to_string(),
            run_dir: out.dir,
            precision: r.precision,
            recall: r.recall,
            f1: r.f1,
            accuracy: r.accuracy,
            auc: r.roc.auc,
        });
    }
    let table = AblationTable {
        rows,
        test_row_ids: test_ids.unwrap_or_default(),
    };
    let path = cfg.output_dir.join(ABLATION_CSV);
    std::fs::write(&path, table.to_csv()).map_err(CliError::io(&path))?;
    Ok(table)
}
