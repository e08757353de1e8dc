//! Feature selection: LASSO by cyclic coordinate descent, and recursive
//! feature elimination driven by random-forest importances.

mod lasso;
mod rfe;

pub use lasso::{
    fit_lasso, fit_lasso_traced, lambda_grid, lambda_max, lasso_objective, lasso_select,
    soft_threshold, LassoModel,
};
pub use rfe::{rfe, RfeConfig};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMethod {
    Lasso,
    Rfe,
    LassoThenRfe,
}

/// One elimination step. Column indices refer to the original design matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionStep {
    pub step: usize,
    pub removed: Vec<usize>,
    /// Cross-validated score measured before the removal, when applicable.
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub input_columns: usize,
    /// Strictly increasing, never empty.
    pub kept_columns: Vec<usize>,
    pub method: SelectionMethod,
    pub trace: Vec<SelectionStep>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl SelectionResult {
    pub fn identity(input_columns: usize, method: SelectionMethod) -> Self {
        Self {
            input_columns,
            kept_columns: (0..input_columns).collect(),
            method,
            trace: Vec::new(),
            warnings: Vec::new(),
        }
    }

    /// Apply the trace to the full column set.
    pub fn replay(&self) -> Vec<usize> {
        let mut alive = vec![true; self.input_columns];
        for step in &self.trace {
            for &c in &step.removed {
                alive[c] = false;
            }
        }
        (0..self.input_columns).filter(|&c| alive[c]).collect()
    }

    /// Compose with a selection that was run on this result's kept columns.
    pub fn then(self, next: SelectionResult) -> SelectionResult {
        let map = |c: usize| self.kept_columns[c];
        let offset = self.trace.len();
        let mut trace = self.trace;
        trace.extend(next.trace.into_iter().map(|s| SelectionStep {
            step: offset + s.step,
            removed: s.removed.into_iter().map(map).collect(),
            score: s.score,
        }));
        let mut warnings = self.warnings;
        warnings.extend(next.warnings);
        SelectionResult {
            input_columns: self.input_columns,
            kept_columns: next.kept_columns.into_iter().map(map).collect(),
            method: match (self.method, next.method) {
                (SelectionMethod::Lasso, SelectionMethod::Rfe) => SelectionMethod::LassoThenRfe,
                (_, m) => m,
            },
            trace,
            warnings,
        }
    }

    /// Structured text report naming the kept columns.
    pub fn to_report(&self, column_names: &[String]) -> serde_json::Value {
        let name = |c: &usize| column_names.get(*c).cloned().unwrap_or_else(|| c.to_string());
        serde_json::json!({
            "method": self.method,
            "input_columns": self.input_columns,
            "kept_columns": self.kept_columns,
            "kept_names": self.kept_columns.iter().map(name).collect::<Vec<_>>(),
            "trace": self.trace.iter().map(|s| serde_json::json!({
                "step": s.step,
                "removed": s.removed,
                "removed_names": s.removed.iter().map(name).collect::<Vec<_>>(),
                "score": s.score,
            })).collect::<Vec<_>>(),
            "warnings": self.warnings,
        })
    }
}
