//! CSV ingestion and the schema file format.
//!
//! Schema files are TOML with one `[[feature]]` table per column:
//!
//! ```toml
//! [[feature]]
//! name = "heart_rate"
//! kind = "continuous"   # or "categorical"
//! critical = true       # optional, default false
//! unit = "bpm"          # optional
//! ```
//!
//! CSV files are UTF-8, comma separated, with one header row. Empty cells and
//! the token `NA` are missing. Columns outside the schema are ignored, except
//! an optional `row_id` column which supplies row identifiers (otherwise the
//! zero-based data row index is used).

use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{validate_schema, Cell, Dataset, FeatureKind, FeatureSchema};
use crate::error::{Error, Result};

pub const ROW_ID_COLUMN: &str = "row_id";

#[derive(Serialize, Deserialize)]
struct SchemaFile {
    feature: Vec<FeatureSchema>,
}

pub fn parse_schema(text: &str) -> Result<Vec<FeatureSchema>> {
    let file: SchemaFile = toml::from_str(text)?;
    validate_schema(&file.feature)?;
    Ok(file.feature)
}

pub fn load_schema(path: impl AsRef<Path>) -> Result<Vec<FeatureSchema>> {
    parse_schema(&std::fs::read_to_string(path)?)
}

pub fn schema_to_toml(schema: &[FeatureSchema]) -> String {
    let file = SchemaFile {
        feature: schema.to_vec(),
    };
    toml::to_string(&file).expect("schema is always representable as TOML")
}

fn is_missing_token(s: &str) -> bool {
    s.is_empty() || s == "NA"
}

pub fn load_csv(
    path: impl AsRef<Path>,
    schema: &[FeatureSchema],
    label_column: &str,
) -> Result<Dataset> {
    load_csv_reader(File::open(path)?, schema, label_column)
}

/// Row numbers in errors are zero-based data rows (the header is not counted).
pub fn load_csv_reader<R: Read>(
    reader: R,
    schema: &[FeatureSchema],
    label_column: &str,
) -> Result<Dataset> {
    validate_schema(schema)?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    let position = |name: &str| header.iter().position(|h| h.trim() == name);

    let feature_pos = schema
        .iter()
        .map(|f| {
            position(&f.name).ok_or_else(|| {
                Error::Schema(format!("column `{}` is missing from the CSV header", f.name))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let label_pos = position(label_column).ok_or_else(|| {
        Error::Schema(format!("label column `{label_column}` is missing from the CSV header"))
    })?;
    let id_pos = position(ROW_ID_COLUMN);

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut row_ids = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let field = |pos: usize| record.get(pos).unwrap_or("").trim();
        let mut row = Vec::with_capacity(schema.len());
        for (feature, &pos) in schema.iter().zip(&feature_pos) {
            let raw = field(pos);
            let cell = if is_missing_token(raw) {
                Cell::Missing
            } else {
                match feature.kind {
                    FeatureKind::Continuous => match raw.parse::<f64>() {
                        Ok(v) if v.is_finite() => Cell::Num(v),
                        _ => {
                            return Err(Error::Parse {
                                row: i,
                                column: feature.name.clone(),
                                message: format!("`{raw}` is not a finite number"),
                            })
                        }
                    },
                    FeatureKind::Categorical => Cell::Cat(raw.to_string()),
                }
            };
            row.push(cell);
        }
        let label = match field(label_pos) {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(Error::Label {
                    row: i,
                    value: other.to_string(),
                })
            }
        };
        rows.push(row);
        labels.push(label);
        row_ids.push(match id_pos {
            Some(p) => field(p).to_string(),
            None => i.to_string(),
        });
    }
    Dataset::new(schema.to_vec(), rows, labels, row_ids)
}
