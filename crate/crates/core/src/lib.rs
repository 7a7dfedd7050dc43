//! Editing engine for binned generalized additive models.
//!
//! Shape functions are edited through [`edit::apply_edit`], evaluated with
//! [`metrics`], inspected with [`correlation`], and recorded in a linear
//! reversible [`history`]. [`session`] ties these together behind the JSON
//! message protocol in [`protocol`]; [`io`] covers the file formats.

pub mod correlation;
pub mod edit;
pub mod history;
pub mod io;
pub mod metrics;
pub mod model;
pub mod protocol;
pub mod session;

pub use edit::{apply_edit, EditDiff, EditKind, EditOp, Selection};
pub use history::{Commit, CommitId, History, Revision, SaveGate};
pub use metrics::{MetricReport, Scope};
pub use model::{FeatureTerm, GamModel, Link, Sample, Value};
pub use session::{Session, SessionError, SessionOptions};
