//! Mean/mode imputation, min-max scaling and one-hot encoding.
//!
//! Parameters are learned once from training rows and frozen. At apply time
//! missing cells are imputed first, then continuous values are mapped by
//! `(x - min) / (max - min)` without clamping. A constant training column
//! (`max == min`) maps to 0.0. Categories unseen during fitting produce an
//! all-zero one-hot block and a warning.

use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{Cell, Dataset, DesignMatrix, FeatureKind, FeatureSchema};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ColumnParams {
    Continuous { mean: f64, min: f64, max: f64 },
    Categorical { mode: String, vocabulary: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPreprocessor {
    pub schema: Vec<FeatureSchema>,
    pub params: Vec<ColumnParams>,
}

impl FittedPreprocessor {
    /// Output column names: continuous features keep their name, categorical
    /// features expand to `name=category` in vocabulary order.
    pub fn output_columns(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (f, p) in self.schema.iter().zip(&self.params) {
            match p {
                ColumnParams::Continuous { .. } => out.push(f.name.clone()),
                ColumnParams::Categorical { vocabulary, .. } => {
                    out.extend(vocabulary.iter().map(|c| format!("{}={c}", f.name)))
                }
            }
        }
        out
    }

    pub fn n_output_columns(&self) -> usize {
        self.params
            .iter()
            .map(|p| match p {
                ColumnParams::Continuous { .. } => 1,
                ColumnParams::Categorical { vocabulary, .. } => vocabulary.len(),
            })
            .sum()
    }
}

pub fn fit_preprocessor(train: &Dataset) -> Result<FittedPreprocessor> {
    let params = train
        .schema()
        .iter()
        .enumerate()
        .map(|(j, feature)| {
            let observed = train.rows().iter().map(|r| &r[j]).filter(|c| !c.is_missing());
            match feature.kind {
                FeatureKind::Continuous => {
                    let values: Vec<f64> = observed
                        .filter_map(|c| match c {
                            Cell::Num(v) => Some(*v),
                            _ => None,
                        })
                        .collect();
                    if values.is_empty() {
                        return Err(Error::UnfitColumn(feature.name.clone()));
                    }
                    Ok(ColumnParams::Continuous {
                        mean: values.iter().sum::<f64>() / values.len() as f64,
                        min: values.iter().copied().fold(f64::INFINITY, f64::min),
                        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    })
                }
                FeatureKind::Categorical => {
                    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
                    for c in observed {
                        if let Cell::Cat(s) = c {
                            *counts.entry(s.as_str()).or_default() += 1;
                        }
                    }
                    // ascending key order + strict comparison: ties go to the smallest category
                    let mut mode: Option<(&str, usize)> = None;
                    for (&cat, &n) in &counts {
                        if mode.is_none_or(|(_, best)| n > best) {
                            mode = Some((cat, n));
                        }
                    }
                    let (mode, _) = mode.ok_or_else(|| Error::UnfitColumn(feature.name.clone()))?;
                    Ok(ColumnParams::Categorical {
                        mode: mode.to_string(),
                        vocabulary: counts.keys().map(|s| s.to_string()).collect(),
                    })
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FittedPreprocessor {
        schema: train.schema().to_vec(),
        params,
    })
}

fn scale(v: f64, min: f64, max: f64) -> f64 {
    if max > min {
        (v - min) / (max - min)
    } else {
        0.0
    }
}

pub fn apply_preprocessor(p: &FittedPreprocessor, d: &Dataset) -> Result<DesignMatrix> {
    let conforms = p.schema.len() == d.schema().len()
        && p.schema
            .iter()
            .zip(d.schema())
            .all(|(a, b)| a.name == b.name && a.kind == b.kind);
    if !conforms {
        return Err(Error::Schema(
            "dataset schema does not match the fitted preprocessor".into(),
        ));
    }

    let width = p.n_output_columns();
    let mut x = Array2::<f64>::zeros((d.n_rows(), width));
    let mut warnings = Vec::new();
    for (i, row) in d.rows().iter().enumerate() {
        let mut col = 0;
        for ((cell, params), feature) in row.iter().zip(&p.params).zip(&p.schema) {
            match params {
                ColumnParams::Continuous { mean, min, max } => {
                    let v = match cell {
                        Cell::Num(v) => *v,
                        _ => *mean,
                    };
                    x[[i, col]] = scale(v, *min, *max);
                    col += 1;
                }
                ColumnParams::Categorical { mode, vocabulary } => {
                    let value = match cell {
                        Cell::Cat(s) => s.as_str(),
                        _ => mode.as_str(),
                    };
                    match vocabulary.binary_search_by(|c| c.as_str().cmp(value)) {
                        Ok(k) => x[[i, col + k]] = 1.0,
                        Err(_) => warnings.push(format!(
                            "row {}: unseen category `{value}` for feature `{}`",
                            d.row_ids()[i],
                            feature.name
                        )),
                    }
                    col += vocabulary.len();
                }
            }
        }
    }
    Ok(DesignMatrix {
        x,
        y: d.labels().to_vec(),
        columns: p.output_columns(),
        row_ids: d.row_ids().to_vec(),
        warnings,
    })
}
