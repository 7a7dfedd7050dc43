//! JSON model file, optionally carrying the edit history.
//!
//! Serialization is canonical: fixed key order, compact separators,
//! shortest round-trip decimals and a trailing newline. Two equal models
//! with equal histories always produce the same bytes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::history::{Commit, History, HistoryError};
use crate::model::{Bins, FeatureTerm, GamModel, InteractionTerm, Link, TermKind};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LoadError {
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("history replay failed at commit `{0}`")]
    ReplayMismatch(String),
}

impl LoadError {
    fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        LoadError::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format_version: u32,
    pub link: Link,
    pub intercept: f64,
    pub terms: Vec<TermRecord>,
    #[serde(default)]
    pub interactions: Vec<InteractionRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub history: Option<HistoryRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermRecord {
    pub name: String,
    pub kind: TermKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    pub scores: Vec<f64>,
    pub counts: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stddev: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionRecord {
    pub feature_a: String,
    pub feature_b: String,
    pub scores: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistoryRecord {
    /// Number of applied commits; commits after it form the redo tail.
    pub head: usize,
    pub commits: Vec<Commit>,
}

/// A loaded model file.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedModel {
    /// Model at the history head, as stored.
    pub model: GamModel,
    /// Model before the first commit (equal to `model` without history).
    pub original: GamModel,
    pub history: History,
}

impl ModelFile {
    pub fn from_model(model: &GamModel, history: Option<&History>) -> Self {
        let terms = model
            .terms()
            .iter()
            .map(|t| TermRecord {
                name: t.name().to_string(),
                kind: t.kind(),
                edges: t.edges().map(<[f64]>::to_vec),
                labels: t.labels().map(<[String]>::to_vec),
                scores: t.scores().to_vec(),
                counts: t.counts().to_vec(),
                stddev: t.stddev().map(<[f64]>::to_vec),
            })
            .collect();
        let interactions = model
            .interactions()
            .iter()
            .map(|it| InteractionRecord {
                feature_a: it.feature_a.clone(),
                feature_b: it.feature_b.clone(),
                scores: it.scores.clone(),
            })
            .collect();
        ModelFile {
            format_version: FORMAT_VERSION,
            link: model.link(),
            intercept: model.intercept(),
            terms,
            interactions,
            history: history.filter(|h| !h.is_empty()).map(|h| HistoryRecord {
                head: h.head(),
                commits: h.commits().to_vec(),
            }),
        }
    }

    pub fn to_model(&self) -> Result<GamModel, LoadError> {
        if self.format_version != FORMAT_VERSION {
            return Err(LoadError::schema(
                "format_version",
                format!("unsupported version {}", self.format_version),
            ));
        }
        let mut terms = Vec::with_capacity(self.terms.len());
        for (i, r) in self.terms.iter().enumerate() {
            let path = format!("terms[{i}]");
            let bins = match (r.kind, &r.edges, &r.labels) {
                (TermKind::Continuous, Some(e), None) => Bins::Continuous(e.clone()),
                (TermKind::Categorical, None, Some(l)) => Bins::Categorical(l.clone()),
                (TermKind::Continuous, _, _) => {
                    return Err(LoadError::schema(path, "continuous terms need `edges` and no `labels`"))
                }
                (TermKind::Categorical, _, _) => {
                    return Err(LoadError::schema(
                        path,
                        "categorical terms need `labels` and no `edges`",
                    ))
                }
            };
            let term = FeatureTerm::new(
                r.name.clone(),
                bins,
                r.scores.clone(),
                r.counts.clone(),
                r.stddev.clone(),
            )
            .map_err(|e| LoadError::schema(path, e.to_string()))?;
            terms.push(term);
        }
        let interactions = self
            .interactions
            .iter()
            .map(|r| InteractionTerm {
                feature_a: r.feature_a.clone(),
                feature_b: r.feature_b.clone(),
                scores: r.scores.clone(),
            })
            .collect();
        GamModel::new(self.intercept, self.link, terms, interactions).map_err(|e| LoadError::schema("", e.to_string()))
    }
}

/// Canonical bytes of `model` with an optional history block.
pub fn save_model(model: &GamModel, history: Option<&History>) -> String {
    let mut s = serde_json::to_string(&ModelFile::from_model(model, history)).expect("model serializes");
    s.push('\n');
    s
}

/// Parses and validates a model file. A history block is verified by
/// checking every commit id and replaying every diff.
pub fn load_model(bytes: &[u8]) -> Result<LoadedModel, LoadError> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let file: ModelFile = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        LoadError::schema(path, e.into_inner().to_string())
    })?;
    de.end().map_err(|e| LoadError::schema("", e.to_string()))?;
    let model = file.to_model()?;

    let Some(rec) = file.history else {
        return Ok(LoadedModel {
            original: model.clone(),
            model,
            history: History::new(),
        });
    };
    let replay_err = |e: HistoryError| match e {
        HistoryError::ReplayMismatch(id) => LoadError::ReplayMismatch(id),
        other => LoadError::schema("history", other.to_string()),
    };
    let history = History::from_parts(rec.commits, rec.head).map_err(replay_err)?;
    let original = history.rewind(&model).map_err(replay_err)?;
    // the redo tail must also apply cleanly
    let mut probe = history.clone();
    let mut m = model.clone();
    while probe.can_redo() {
        m = probe.redo(&m).map_err(replay_err)?;
    }
    Ok(LoadedModel {
        model,
        original,
        history,
    })
}
