use riskforest_core::tabular::apply_preprocessor;
use riskforest_core::{Dataset, DesignMatrix, FittedPreprocessor, ForestModel};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Everything needed to score raw rows: frozen preprocessing, the selected
/// design-matrix columns and the trained forest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub preprocessor: FittedPreprocessor,
    /// Indices into the preprocessor's output columns.
    pub selected_columns: Vec<usize>,
    pub selected_names: Vec<String>,
    pub forest: ForestModel,
}

impl ModelBundle {
    /// Preprocess `d` and keep the selected columns.
    pub fn design(&self, d: &Dataset) -> riskforest_core::Result<DesignMatrix> {
        Ok(apply_preprocessor(&self.preprocessor, d)?.select_columns(&self.selected_columns))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model bundle serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("model bundle: {e}")))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        Self::from_json(&text)
    }
}
