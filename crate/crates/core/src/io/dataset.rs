//! CSV validation datasets.
//!
//! The header must name every model feature plus the label column; extra
//! columns are ignored. Empty categorical cells read as [`MISSING`].

use std::collections::HashMap;

use thiserror::Error;

use crate::model::{GamModel, Link, Sample, TermKind, Value, MISSING};

pub const DEFAULT_LABEL_COLUMN: &str = "label";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}, column `{column}`: {message}")]
    RowParse {
        row: usize,
        column: String,
        message: String,
    },
    #[error("csv: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetOptions {
    pub label_column: String,
    /// Skip bad rows instead of failing on the first one.
    pub lenient: bool,
}

impl Default for DatasetOptions {
    fn default() -> Self {
        DatasetOptions {
            label_column: DEFAULT_LABEL_COLUMN.to_string(),
            lenient: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    /// Rows dropped in lenient mode.
    pub skipped: Vec<DatasetError>,
}

pub fn load_dataset(bytes: &[u8], model: &GamModel, opts: &DatasetOptions) -> Result<Dataset, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    let headers = rdr.headers().map_err(|e| DatasetError::Csv(e.to_string()))?.clone();
    let position: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let column = |name: &str| {
        position
            .get(name)
            .copied()
            .ok_or_else(|| DatasetError::MissingColumn(name.to_string()))
    };
    let feature_cols = model
        .terms()
        .iter()
        .map(|t| column(t.name()))
        .collect::<Result<Vec<_>, _>>()?;
    let label_col = column(&opts.label_column)?;

    let mut samples = Vec::new();
    let mut skipped = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let parsed = rec
            .map_err(|e| DatasetError::RowParse {
                row,
                column: String::new(),
                message: e.to_string(),
            })
            .and_then(|rec| parse_row(&rec, row, model, &feature_cols, label_col, &opts.label_column));
        match parsed {
            Ok(s) => samples.push(s),
            Err(e) if opts.lenient => skipped.push(e),
            Err(e) => return Err(e),
        }
    }
    Ok(Dataset { samples, skipped })
}

fn parse_row(
    rec: &csv::StringRecord,
    row: usize,
    model: &GamModel,
    feature_cols: &[usize],
    label_col: usize,
    label_name: &str,
) -> Result<Sample, DatasetError> {
    let err = |column: &str, message: String| DatasetError::RowParse {
        row,
        column: column.to_string(),
        message,
    };
    let mut values = Vec::with_capacity(feature_cols.len());
    for (term, &c) in model.terms().iter().zip(feature_cols) {
        let cell = rec.get(c).unwrap_or("");
        let value = match term.kind() {
            TermKind::Continuous => match cell.parse::<f64>() {
                Ok(x) if !x.is_nan() => Value::Number(x),
                _ => return Err(err(term.name(), format!("`{cell}` is not a number"))),
            },
            TermKind::Categorical => {
                let v = Value::Label(if cell.is_empty() {
                    MISSING.to_string()
                } else {
                    cell.to_string()
                });
                term.bin_index(&v).map_err(|e| err(term.name(), e.to_string()))?;
                v
            }
        };
        values.push(value);
    }
    let cell = rec.get(label_col).unwrap_or("");
    let label = match (model.link(), cell.parse::<f64>()) {
        (Link::Logit, Ok(y)) if y == 0.0 || y == 1.0 => y,
        (Link::Logit, _) => return Err(err(label_name, format!("`{cell}` is not a 0/1 label"))),
        (Link::Identity, Ok(y)) if y.is_finite() => y,
        (Link::Identity, _) => return Err(err(label_name, format!("`{cell}` is not a finite number"))),
    };
    Ok(Sample { values, label })
}
