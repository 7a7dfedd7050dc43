//! Edit scripts: ordered edits for headless replay.
//!
//! ```json
//! {"edits": [
//!   {"term": "Age", "x_range": [81, 87], "edit": {"kind": "interpolate", "mode": "linear"}},
//!   {"term": "Age", "x_range": [99, null], "edit": {"kind": "align", "anchor": "left"}},
//!   {"term": "Asthma", "labels": ["false", "true"], "edit": {"kind": "delete"}, "message": "remove asthma effect"}
//! ]}
//! ```
//!
//! Each record names its bins with exactly one of `bins` (indices),
//! `bin_range` (inclusive indices), `x_range` (values on a continuous axis,
//! `null` for an open end) or `labels` (categorical levels).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::edit::{EditKind, EditOp, Selection};
use crate::model::GamModel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScriptError {
    #[error("edit script: {0}")]
    Parse(String),
    #[error("edit {index}: {message}")]
    Unresolvable { index: usize, message: String },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EditScript {
    pub edits: Vec<ScriptEdit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptEdit {
    pub term: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin_range: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_range: Option<[Option<f64>; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    pub edit: EditKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl EditScript {
    pub fn parse(bytes: &[u8]) -> Result<Self, ScriptError> {
        serde_json::from_slice(bytes).map_err(|e| ScriptError::Parse(e.to_string()))
    }
}

impl ScriptEdit {
    /// Resolves the record's bin reference against `model`.
    pub fn resolve(&self, model: &GamModel, index: usize) -> Result<EditOp, ScriptError> {
        let fail = |message: String| ScriptError::Unresolvable { index, message };
        let given = [
            self.bins.is_some(),
            self.bin_range.is_some(),
            self.x_range.is_some(),
            self.labels.is_some(),
        ]
        .iter()
        .filter(|&&b| b)
        .count();
        if given != 1 {
            return Err(fail(
                "exactly one of bins, bin_range, x_range, labels is required".into(),
            ));
        }
        let term = model
            .term(&self.term)
            .ok_or_else(|| fail(format!("unknown term `{}`", self.term)))?;
        let bins = if let Some(b) = &self.bins {
            b.clone()
        } else if let Some([lo, hi]) = self.bin_range {
            if lo > hi {
                return Err(fail(format!("empty bin range [{lo}, {hi}]")));
            }
            (lo..=hi).collect()
        } else if let Some([lo, hi]) = self.x_range {
            if term.edges().is_none() {
                return Err(fail(format!("x_range on categorical term `{}`", self.term)));
            }
            // snap outward to whole bins
            let first = lo.and_then(|x| term.bin_of(x)).unwrap_or(0);
            let last = hi.and_then(|x| term.bin_of(x)).unwrap_or(term.len() - 1);
            if first > last {
                return Err(fail("x_range selects no bins".into()));
            }
            (first..=last).collect()
        } else {
            let labels = self.labels.as_ref().unwrap();
            let known = term
                .labels()
                .ok_or_else(|| fail(format!("labels on continuous term `{}`", self.term)))?;
            labels
                .iter()
                .map(|l| {
                    known
                        .iter()
                        .position(|k| k == l)
                        .ok_or_else(|| fail(format!("unknown label `{l}` on `{}`", self.term)))
                })
                .collect::<Result<_, _>>()?
        };
        Ok(EditOp::new(self.edit, Selection::new(self.term.clone(), bins)))
    }
}
