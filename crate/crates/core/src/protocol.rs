//! Request/response message catalog spoken between the editor UI (or any
//! client) and a [`Session`].
//!
//! Every message is a JSON object tagged by `type`:
//!
//! ```json
//! {"type": "PreviewEdit", "op": {"kind": "delete", "selection": {"term": "Asthma", "bins": [1]}}}
//! {"type": "Preview", "diff": {...}, "noop": false, "affected_samples": 28}
//! ```

use serde::{Deserialize, Serialize};

use crate::correlation::CorrelationRanking;
use crate::edit::{EditOp, Selection};
use crate::history::{Commit, CommitId, Revision};
use crate::io::{self, DatasetOptions};
use crate::metrics::{MetricReport, Scope};
use crate::session::{
    FeatureDetail, FeatureSummary, HistoryView, InteractionDetail, PreviewInfo, SaveOutcome, Session, SessionError,
    SessionOptions,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum Request {
    /// Replaces the session with a new model file and optional CSV dataset.
    LoadModel {
        model: String,
        #[serde(default)]
        dataset: Option<String>,
        #[serde(default)]
        lenient: bool,
    },
    ListFeatures {},
    GetFeature {
        name: String,
    },
    PreviewEdit {
        op: EditOp,
    },
    ResolvePreview {
        accept: bool,
    },
    Undo {},
    Redo {},
    Checkout {
        revision: Revision,
    },
    ConfirmCommit {
        id: CommitId,
    },
    SetMessage {
        id: CommitId,
        message: String,
    },
    GetMetrics {
        scope: Scope,
    },
    GetCorrelation {
        selection: Selection,
    },
    GetHistory {},
    SaveModel {},
}

impl Request {
    /// Messages that never change session state.
    pub fn is_read_only(&self) -> bool {
        matches!(
            self,
            Request::ListFeatures {}
                | Request::GetFeature { .. }
                | Request::GetMetrics { .. }
                | Request::GetCorrelation { .. }
                | Request::GetHistory {}
                | Request::SaveModel {}
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Response {
    Loaded {
        features: usize,
        samples: usize,
        skipped_rows: usize,
        commits: usize,
    },
    Features {
        features: Vec<FeatureSummary>,
    },
    Feature(FeatureDetail),
    Interaction(InteractionDetail),
    Preview(PreviewInfo),
    Resolved {
        commit: Option<Commit>,
    },
    Head {
        head: Revision,
    },
    Ack,
    Metrics(MetricReport),
    Correlation(CorrelationRanking),
    History(HistoryView),
    Saved {
        model: String,
    },
    SaveBlocked {
        unconfirmed: Vec<CommitId>,
    },
    Error {
        code: String,
        message: String,
    },
}

impl Response {
    pub fn error(code: &str, message: impl Into<String>) -> Self {
        Response::Error {
            code: code.to_string(),
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        matches!(self, Response::Error { .. })
    }
}

impl From<SessionError> for Response {
    fn from(e: SessionError) -> Self {
        Response::error(e.code(), e.to_string())
    }
}

fn respond<T>(r: Result<T, SessionError>, f: impl FnOnce(T) -> Response) -> Response {
    r.map_or_else(Response::from, f)
}

/// Answers a read-only request.
pub fn query(session: &Session, req: &Request) -> Response {
    match req {
        Request::ListFeatures {} => respond(session.features(), |features| Response::Features { features }),
        Request::GetFeature { name } => match session.interaction(name) {
            Some(it) => Response::Interaction(it),
            None => respond(session.feature(name), Response::Feature),
        },
        Request::GetMetrics { scope } => respond(session.metrics(scope), Response::Metrics),
        Request::GetCorrelation { selection } => respond(session.correlation(selection), Response::Correlation),
        Request::GetHistory {} => Response::History(session.history_view()),
        Request::SaveModel {} => respond(session.save(), |out| match out {
            SaveOutcome::Saved { model } => Response::Saved { model },
            SaveOutcome::Blocked { unconfirmed } => Response::SaveBlocked { unconfirmed },
        }),
        _ => Response::error("NotReadOnly", "request mutates the session"),
    }
}

/// Answers any request, mutating the session when required.
pub fn handle(session: &mut Session, req: Request) -> Response {
    if req.is_read_only() {
        return query(session, &req);
    }
    match req {
        Request::LoadModel {
            model,
            dataset,
            lenient,
        } => load(session, &model, dataset.as_deref(), lenient),
        Request::PreviewEdit { op } => respond(session.preview(op), Response::Preview),
        Request::ResolvePreview { accept } => {
            respond(session.resolve_preview(accept), |commit| Response::Resolved { commit })
        }
        Request::Undo {} => respond(session.undo(), |head| Response::Head { head }),
        Request::Redo {} => respond(session.redo(), |head| Response::Head { head }),
        Request::Checkout { revision } => respond(session.checkout(&revision), |head| Response::Head { head }),
        Request::ConfirmCommit { id } => respond(session.confirm(&id), |_| Response::Ack),
        Request::SetMessage { id, message } => respond(session.set_message(&id, message), |_| Response::Ack),
        _ => unreachable!("read-only requests handled above"),
    }
}

fn load(session: &mut Session, model: &str, dataset: Option<&str>, lenient: bool) -> Response {
    let loaded = match io::load_model(model.as_bytes()) {
        Ok(l) => l,
        Err(e) => return SessionError::from(e).into(),
    };
    let opts = DatasetOptions {
        lenient,
        ..Default::default()
    };
    let data = match dataset {
        Some(csv) => match io::load_dataset(csv.as_bytes(), &loaded.model, &opts) {
            Ok(d) => d,
            Err(e) => return Response::error("DatasetError", e.to_string()),
        },
        None => io::Dataset {
            samples: Vec::new(),
            skipped: Vec::new(),
        },
    };
    let (features, commits, skipped_rows) = (
        loaded.model.feature_count(),
        loaded.history.commits().len(),
        data.skipped.len(),
    );
    let sopts = SessionOptions {
        threshold: session.threshold(),
        ..Default::default()
    };
    match Session::new(loaded, data.samples, sopts) {
        Ok(s) => {
            *session = s;
            Response::Loaded {
                features,
                samples: session.dataset().len(),
                skipped_rows,
                commits,
            }
        }
        Err(e) => e.into(),
    }
}

/// Parses a JSON request and returns the JSON response.
pub fn handle_json(session: &mut Session, body: &str) -> String {
    let resp = match serde_json::from_str::<Request>(body) {
        Ok(req) => handle(session, req),
        Err(e) => Response::error("BadRequest", e.to_string()),
    };
    serde_json::to_string(&resp).expect("response serializes")
}
