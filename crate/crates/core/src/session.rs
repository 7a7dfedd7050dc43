//! One editing session: a model, its history, a validation dataset and at
//! most one staged (previewed, not yet committed) edit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::correlation::{self, CorrelationRanking};
use crate::edit::{self, EditDiff, EditError, EditOp, Selection};
use crate::history::{self, Commit, CommitId, History, HistoryError, Revision, SaveGate};
use crate::io::{self, EditScript, LoadError, LoadedModel, ScriptError};
use crate::metrics::{self, Evaluator, MetricReport, MetricsError, Scope};
use crate::model::{GamModel, ModelError, Sample, TermKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SessionError {
    #[error("a staged edit is pending; accept or discard it first")]
    StagedEditPending,
    #[error("no staged edit")]
    NoStagedEdit,
    #[error("staged edit changes nothing")]
    NoOpEdit,
    #[error(transparent)]
    Edit(#[from] EditError),
    #[error(transparent)]
    History(#[from] HistoryError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Script(#[from] ScriptError),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
}

impl SessionError {
    /// Stable machine-readable code for the wire protocol.
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::StagedEditPending => "StagedEditPending",
            SessionError::NoStagedEdit => "NoStagedEdit",
            SessionError::NoOpEdit => "NoOpEdit",
            SessionError::Edit(e) => match e {
                EditError::InteractionNotEditable(_) => "InteractionNotEditable",
                EditError::InvalidSelection(_) => "InvalidSelection",
                EditError::RequiresOrderedAxis { .. } => "RequiresOrderedAxis",
                EditError::DegenerateGeometry => "DegenerateGeometry",
                EditError::DegenerateCounts => "DegenerateCounts",
            },
            SessionError::History(e) => match e {
                HistoryError::EmptyDiff => "EmptyDiff",
                HistoryError::NothingToUndo => "NothingToUndo",
                HistoryError::NothingToRedo => "NothingToRedo",
                HistoryError::UnknownCommit(_) => "UnknownCommit",
                HistoryError::ReplayMismatch(_) => "ReplayMismatch",
                HistoryError::Malformed(_) => "MalformedHistory",
            },
            SessionError::Metrics(e) => match e {
                MetricsError::UnknownSlice { .. } => "UnknownSlice",
                MetricsError::Selection(_) => "InvalidSelection",
                MetricsError::Model(_) => "ModelError",
                MetricsError::SchemaMismatch => "SchemaMismatch",
            },
            SessionError::Model(_) => "ModelError",
            SessionError::Load(LoadError::Schema { .. }) => "SchemaError",
            SessionError::Load(LoadError::ReplayMismatch(_)) => "ReplayMismatch",
            SessionError::Script(_) => "ScriptError",
            SessionError::UnknownFeature(_) => "UnknownFeature",
        }
    }
}

pub type Result<T, E = SessionError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy)]
pub struct SessionOptions {
    pub threshold: f64,
    /// Milliseconds since the Unix epoch, used to stamp commits.
    pub clock: fn() -> u64,
}

impl Default for SessionOptions {
    fn default() -> Self {
        SessionOptions {
            threshold: metrics::DEFAULT_THRESHOLD,
            clock: system_clock,
        }
    }
}

pub fn system_clock() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

#[derive(Debug, Clone)]
struct Staged {
    op: EditOp,
    model: GamModel,
    diff: EditDiff,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSummary {
    pub name: String,
    pub kind: TermKind,
    pub bins: usize,
    pub importance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDetail {
    pub name: String,
    pub kind: TermKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    /// Scores of the current model (staged edit included).
    pub scores: Vec<f64>,
    pub original_scores: Vec<f64>,
    /// Per bin, whether the current score differs from the original.
    pub edited: Vec<bool>,
    pub counts: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stddev: Option<Vec<f64>>,
    pub importance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionDetail {
    pub name: String,
    pub feature_a: String,
    pub feature_b: String,
    pub scores: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreviewInfo {
    pub diff: EditDiff,
    pub noop: bool,
    /// Samples in the edited bins.
    pub affected_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryView {
    pub head: Revision,
    pub commits: Vec<Commit>,
    pub can_undo: bool,
    pub can_redo: bool,
    pub staged: bool,
    pub save_gate: SaveGate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SaveOutcome {
    Saved { model: String },
    Blocked { unconfirmed: Vec<CommitId> },
}

#[derive(Debug, Clone)]
pub struct Session {
    original: GamModel,
    committed: GamModel,
    previous: GamModel,
    staged: Option<Staged>,
    history: History,
    dataset: Vec<Sample>,
    evaluator: Evaluator,
    opts: SessionOptions,
}

impl Session {
    pub fn new(loaded: LoadedModel, dataset: Vec<Sample>, opts: SessionOptions) -> Result<Self> {
        let LoadedModel {
            model,
            original,
            history,
        } = loaded;
        let evaluator = Evaluator::new(&original, &dataset, opts.threshold)?;
        let mut s = Session {
            previous: model.clone(),
            committed: model,
            original,
            staged: None,
            history,
            dataset,
            evaluator,
            opts,
        };
        s.previous = s.before_head()?;
        s.evaluator.sync(&s.previous, &s.committed)?;
        Ok(s)
    }

    pub fn from_model(model: GamModel, dataset: Vec<Sample>, opts: SessionOptions) -> Result<Self> {
        Self::new(
            LoadedModel {
                original: model.clone(),
                model,
                history: History::new(),
            },
            dataset,
            opts,
        )
    }

    pub fn original(&self) -> &GamModel {
        &self.original
    }

    /// Model at the history head, ignoring any staged edit.
    pub fn committed(&self) -> &GamModel {
        &self.committed
    }

    /// Model the user currently sees: the staged model if any.
    pub fn current(&self) -> &GamModel {
        self.staged.as_ref().map_or(&self.committed, |s| &s.model)
    }

    /// Model before the most recent edit (staged or committed).
    pub fn previous(&self) -> &GamModel {
        &self.previous
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    pub fn dataset(&self) -> &[Sample] {
        &self.dataset
    }

    pub fn threshold(&self) -> f64 {
        self.opts.threshold
    }

    pub fn has_staged(&self) -> bool {
        self.staged.is_some()
    }

    fn before_head(&mut self) -> Result<GamModel> {
        match self.history.head() {
            0 => Ok(self.committed.clone()),
            h => Ok(self.history.snapshot(&self.original, h - 1)?),
        }
    }

    fn refresh(&mut self) -> Result<()> {
        self.previous = if self.staged.is_some() {
            self.committed.clone()
        } else {
            self.before_head()?
        };
        let current = self.current().clone();
        self.evaluator.sync(&self.previous, &current)?;
        Ok(())
    }

    fn ensure_unstaged(&self) -> Result<()> {
        if self.staged.is_some() {
            Err(SessionError::StagedEditPending)
        } else {
            Ok(())
        }
    }

    pub fn preview(&mut self, op: EditOp) -> Result<PreviewInfo> {
        self.ensure_unstaged()?;
        let (model, diff) = edit::apply_edit(&self.committed, &op)?;
        let t = op.selection.resolve(&self.committed)?;
        let affected_samples = self.evaluator.table().samples_in(t, &op.selection).len();
        let info = PreviewInfo {
            noop: diff.is_noop(),
            diff: diff.clone(),
            affected_samples,
        };
        self.staged = Some(Staged { op, model, diff });
        self.refresh()?;
        Ok(info)
    }

    /// Accepts (commits) or discards the staged edit.
    pub fn resolve_preview(&mut self, accept: bool) -> Result<Option<Commit>> {
        let staged = self.staged.as_ref().ok_or(SessionError::NoStagedEdit)?;
        if !accept {
            self.staged = None;
            self.refresh()?;
            return Ok(None);
        }
        if staged.diff.is_noop() {
            return Err(SessionError::NoOpEdit);
        }
        let staged = self.staged.take().unwrap();
        let term = self
            .committed
            .term(&staged.diff.term)
            .expect("staged diff refers to a model term");
        let message = history::auto_message(&staged.diff, &staged.op.kind, term);
        let commit = self.history.commit(staged.diff, message, (self.opts.clock)())?.clone();
        self.committed = staged.model;
        self.refresh()?;
        Ok(Some(commit))
    }

    pub fn undo(&mut self) -> Result<Revision> {
        self.ensure_unstaged()?;
        self.committed = self.history.undo(&self.committed)?;
        self.refresh()?;
        Ok(self.history.head_revision())
    }

    pub fn redo(&mut self) -> Result<Revision> {
        self.ensure_unstaged()?;
        self.committed = self.history.redo(&self.committed)?;
        self.refresh()?;
        Ok(self.history.head_revision())
    }

    pub fn checkout(&mut self, rev: &Revision) -> Result<Revision> {
        self.ensure_unstaged()?;
        self.committed = self.history.checkout(rev, &self.committed)?;
        self.refresh()?;
        Ok(self.history.head_revision())
    }

    pub fn confirm(&mut self, id: &CommitId) -> Result<()> {
        Ok(self.history.confirm(id)?)
    }

    pub fn set_message(&mut self, id: &CommitId, message: String) -> Result<()> {
        Ok(self.history.set_message(id, message)?)
    }

    /// Canonical model file with history, unless a commit is unconfirmed.
    pub fn save(&self) -> Result<SaveOutcome> {
        self.ensure_unstaged()?;
        Ok(match self.history.save_gate() {
            SaveGate::Ok => SaveOutcome::Saved {
                model: io::save_model(&self.committed, Some(&self.history)),
            },
            SaveGate::Blocked { unconfirmed } => SaveOutcome::Blocked { unconfirmed },
        })
    }

    pub fn metrics(&self, scope: &Scope) -> Result<MetricReport> {
        Ok(self.evaluator.report(scope)?)
    }

    pub fn correlation(&self, selection: &Selection) -> Result<CorrelationRanking> {
        Ok(correlation::ranking_with_table(
            self.current(),
            self.evaluator.table(),
            selection,
        )?)
    }

    /// Univariate terms by importance, descending; ties by name.
    pub fn features(&self) -> Result<Vec<FeatureSummary>> {
        let mut out = self
            .current()
            .terms()
            .iter()
            .map(|t| {
                Ok(FeatureSummary {
                    name: t.name().to_string(),
                    kind: t.kind(),
                    bins: t.len(),
                    importance: t.importance()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        out.sort_by(|a, b| b.importance.total_cmp(&a.importance).then_with(|| a.name.cmp(&b.name)));
        Ok(out)
    }

    pub fn feature(&self, name: &str) -> Result<FeatureDetail> {
        let current = self.current();
        let t = current
            .term_index(name)
            .ok_or_else(|| SessionError::UnknownFeature(name.to_string()))?;
        let term = &current.terms()[t];
        let orig = &self.original.terms()[t];
        Ok(FeatureDetail {
            name: term.name().to_string(),
            kind: term.kind(),
            edges: term.edges().map(<[f64]>::to_vec),
            labels: term.labels().map(<[String]>::to_vec),
            scores: term.scores().to_vec(),
            original_scores: orig.scores().to_vec(),
            edited: term
                .scores()
                .iter()
                .zip(orig.scores())
                .map(|(a, b)| a.to_bits() != b.to_bits())
                .collect(),
            counts: term.counts().to_vec(),
            stddev: term.stddev().map(<[f64]>::to_vec),
            importance: term.importance()?,
        })
    }

    pub fn interaction(&self, name: &str) -> Option<InteractionDetail> {
        self.current()
            .interactions()
            .iter()
            .find(|it| it.name() == name)
            .map(|it| InteractionDetail {
                name: it.name(),
                feature_a: it.feature_a.clone(),
                feature_b: it.feature_b.clone(),
                scores: it.scores.clone(),
            })
    }

    pub fn history_view(&self) -> HistoryView {
        HistoryView {
            head: self.history.head_revision(),
            commits: self.history.commits().to_vec(),
            can_undo: self.history.can_undo(),
            can_redo: self.history.can_redo(),
            staged: self.staged.is_some(),
            save_gate: self.history.save_gate(),
        }
    }
}

/// Result of a headless script run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptOutcome {
    pub before: MetricReport,
    pub after: MetricReport,
    /// Commits created by the script, in order.
    pub commits: Vec<Commit>,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("edit {index} failed: {source}")]
pub struct ScriptRunError {
    pub index: usize,
    pub source: SessionError,
}

/// Applies every script edit in order, committing and confirming each.
/// Stops at the first failing edit; earlier edits stay committed.
pub fn run_script(session: &mut Session, script: &EditScript) -> Result<ScriptOutcome, ScriptRunError> {
    let at = |index: usize| move |source: SessionError| ScriptRunError { index, source };
    let before = session.metrics(&Scope::Global).map_err(at(0))?;
    let mut commits = Vec::new();
    for (i, rec) in script.edits.iter().enumerate() {
        let op = rec
            .resolve(session.committed(), i)
            .map_err(|e| at(i)(SessionError::Script(e)))?;
        let info = session.preview(op).map_err(at(i))?;
        if info.noop {
            session.resolve_preview(false).map_err(at(i))?;
            return Err(at(i)(SessionError::NoOpEdit));
        }
        let mut commit = session
            .resolve_preview(true)
            .map_err(at(i))?
            .expect("accepted edit yields a commit");
        if let Some(msg) = &rec.message {
            session.set_message(&commit.id, msg.clone()).map_err(at(i))?;
            commit.message = msg.clone();
        }
        session.confirm(&commit.id).map_err(at(i))?;
        commit.confirmed = true;
        commits.push(commit);
    }
    let after = session.metrics(&Scope::Global).map_err(at(script.edits.len()))?;
    Ok(ScriptOutcome { before, after, commits })
}
