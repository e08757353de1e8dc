//! Column-typed tabular data: schema, CSV ingestion, series aggregation,
//! row exclusion, preprocessing and train/test splitting.

mod io;
mod ops;
mod preprocess;

pub use io::{load_csv, load_csv_reader, load_schema, parse_schema, schema_to_toml};
pub use ops::{aggregate_series, aggregate_windows, exclude_rows, split, SeriesSummary};
pub use preprocess::{apply_preprocessor, fit_preprocessor, ColumnParams, FittedPreprocessor};

use std::collections::HashSet;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Continuous,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub name: String,
    pub kind: FeatureKind,
    /// Participates in the missing-data exclusion rule.
    #[serde(default)]
    pub critical: bool,
    #[serde(default)]
    pub unit: String,
}

impl FeatureSchema {
    pub fn continuous(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Continuous,
            critical: false,
            unit: String::new(),
        }
    }

    pub fn categorical(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Categorical,
            critical: false,
            unit: String::new(),
        }
    }

    pub fn critical(mut self) -> Self {
        self.critical = true;
        self
    }
}

pub(crate) fn validate_schema(schema: &[FeatureSchema]) -> Result<()> {
    if schema.is_empty() {
        return Err(Error::Schema("schema must list at least one feature".into()));
    }
    let mut seen = HashSet::new();
    for f in schema {
        if !seen.insert(f.name.as_str()) {
            return Err(Error::Schema(format!("duplicate feature name `{}`", f.name)));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Cat(String),
    Missing,
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }
}

/// An `n x p` table of typed cells with binary labels.
///
/// Immutable after construction; all invariants are checked by [`Dataset::new`].
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Vec<FeatureSchema>,
    rows: Vec<Vec<Cell>>,
    labels: Vec<u8>,
    row_ids: Vec<String>,
}

impl Dataset {
    pub fn new(
        schema: Vec<FeatureSchema>,
        rows: Vec<Vec<Cell>>,
        labels: Vec<u8>,
        row_ids: Vec<String>,
    ) -> Result<Self> {
        validate_schema(&schema)?;
        if labels.len() != rows.len() || row_ids.len() != rows.len() {
            return Err(Error::Shape(format!(
                "{} rows, {} labels, {} row ids",
                rows.len(),
                labels.len(),
                row_ids.len()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != schema.len() {
                return Err(Error::Shape(format!(
                    "row {i} has {} cells, schema has {}",
                    row.len(),
                    schema.len()
                )));
            }
            for (cell, feature) in row.iter().zip(&schema) {
                let ok = match (cell, feature.kind) {
                    (Cell::Missing, _) => true,
                    (Cell::Num(v), FeatureKind::Continuous) => v.is_finite(),
                    (Cell::Cat(_), FeatureKind::Categorical) => true,
                    _ => false,
                };
                if !ok {
                    return Err(Error::Parse {
                        row: i,
                        column: feature.name.clone(),
                        message: format!("cell {cell:?} does not match kind {:?}", feature.kind),
                    });
                }
            }
        }
        if let Some((i, l)) = labels.iter().enumerate().find(|(_, &l)| l > 1) {
            return Err(Error::Label {
                row: i,
                value: l.to_string(),
            });
        }
        Ok(Self {
            schema,
            rows,
            labels,
            row_ids,
        })
    }

    pub fn schema(&self) -> &[FeatureSchema] {
        &self.schema
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.schema.len()
    }

    pub fn missing_count(&self) -> usize {
        self.rows.iter().flatten().filter(|c| c.is_missing()).count()
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            row_ids: indices.iter().map(|&i| self.row_ids[i].clone()).collect(),
        }
    }
}

/// Ordered, strictly increasing timestamps (hours) with one value each.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesWindow {
    timestamps: Vec<f64>,
    values: Vec<f64>,
}

impl SeriesWindow {
    pub fn new(timestamps: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if timestamps.len() != values.len() {
            return Err(Error::Shape(format!(
                "{} timestamps but {} values",
                timestamps.len(),
                values.len()
            )));
        }
        if timestamps.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less)) {
            return Err(Error::Input("timestamps must be strictly increasing".into()));
        }
        if values.iter().chain(&timestamps).any(|v| !v.is_finite()) {
            return Err(Error::Input("series contains non-finite values".into()));
        }
        Ok(Self { timestamps, values })
    }

    /// Evenly spaced hourly timestamps starting at zero.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let timestamps = (0..values.len()).map(|i| i as f64).collect();
        Self::new(timestamps, values)
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult {
    pub train: Dataset,
    pub test: Dataset,
    pub seed: u64,
    pub train_fraction: f64,
}

/// Fully numeric model input produced by [`apply_preprocessor`].
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub x: Array2<f64>,
    pub y: Vec<u8>,
    pub columns: Vec<String>,
    pub row_ids: Vec<String>,
    /// Unseen categories and similar non-fatal issues.
    pub warnings: Vec<String>,
}

impl DesignMatrix {
    /// Keep only `columns` (indices into the current column list).
    pub fn select_columns(&self, columns: &[usize]) -> DesignMatrix {
        DesignMatrix {
            x: self.x.select(ndarray::Axis(1), columns),
            y: self.y.clone(),
            columns: columns.iter().map(|&c| self.columns[c].clone()).collect(),
            row_ids: self.row_ids.clone(),
            warnings: self.warnings.clone(),
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> DesignMatrix {
        DesignMatrix {
            x: self.x.select(ndarray::Axis(0), rows),
            y: rows.iter().map(|&r| self.y[r]).collect(),
            columns: self.columns.clone(),
            row_ids: rows.iter().map(|&r| self.row_ids[r].clone()).collect(),
            warnings: self.warnings.clone(),
        }
    }
}
