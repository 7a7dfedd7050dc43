//! Linear, git-style edit history.
//!
//! Each commit stores the exact diff of one edit. Identifiers hash the
//! parent id and the canonical diff only, so editing a message or
//! confirming a commit never changes identity.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::edit::{EditDiff, EditKind};
use crate::model::{FeatureTerm, GamModel};

/// Parent marker of the first commit.
pub const ROOT: &str = "ROOT";

/// Snapshots are memoized after every this many commits.
pub const CHECKPOINT_INTERVAL: usize = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HistoryError {
    #[error("edit changes nothing")]
    EmptyDiff,
    #[error("nothing to undo")]
    NothingToUndo,
    #[error("nothing to redo")]
    NothingToRedo,
    #[error("unknown commit `{0}`")]
    UnknownCommit(String),
    #[error("commit `{0}` does not replay onto the model")]
    ReplayMismatch(String),
    #[error("malformed history: {0}")]
    Malformed(String),
}

pub type Result<T, E = HistoryError> = std::result::Result<T, E>;

/// Eight lowercase hex digits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CommitId(String);

impl CommitId {
    pub fn parse(s: &str) -> Option<Self> {
        (s.len() == 8 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))).then(|| CommitId(s.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CommitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for CommitId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for CommitId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        CommitId::parse(&s).ok_or_else(|| serde::de::Error::custom(format!("invalid commit id `{s}`")))
    }
}

/// Commit reference: a commit id or the root before any edit.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Revision {
    Root,
    Commit(CommitId),
}

impl Revision {
    pub fn parse(s: &str) -> Option<Self> {
        if s == ROOT {
            Some(Revision::Root)
        } else {
            CommitId::parse(s).map(Revision::Commit)
        }
    }
}

impl fmt::Display for Revision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Revision::Root => f.write_str(ROOT),
            Revision::Commit(id) => id.fmt(f),
        }
    }
}

impl Serialize for Revision {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Revision {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Revision::parse(&s).ok_or_else(|| serde::de::Error::custom(format!("invalid revision `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Commit {
    pub id: CommitId,
    pub parent: Revision,
    /// UTC milliseconds since the Unix epoch.
    pub timestamp: u64,
    pub message: String,
    pub confirmed: bool,
    pub diff: EditDiff,
}

/// Identifier of a commit with `parent` and `diff`.
pub fn commit_id(parent: &Revision, diff: &EditDiff) -> CommitId {
    let mut h = Sha256::new();
    h.update(parent.to_string().as_bytes());
    h.update(b"\n");
    h.update(serde_json::to_vec(diff).expect("diff serializes").as_slice());
    let digest = h.finalize();
    let hex: String = digest[..4].iter().map(|b| format!("{b:02x}")).collect();
    CommitId(hex)
}

/// Default commit message for an edit.
///
/// Continuous: `<tool> <term> [<low>, <high>] (<n> bins)` with the left
/// edges of the first and last bin. Categorical: `<tool> <term> {labels}
/// (<n> bins)`.
pub fn auto_message(diff: &EditDiff, kind: &EditKind, term: &FeatureTerm) -> String {
    let tool = kind.tool_name();
    let n = diff.bins.len();
    let span = match (term.edges(), term.labels()) {
        (Some(edges), _) => {
            let lo = diff.bins.first().map(|&b| edges[b]).unwrap_or(f64::NAN);
            let hi = diff.bins.last().map(|&b| edges[b]).unwrap_or(f64::NAN);
            format!("[{lo}, {hi}]")
        }
        (None, Some(labels)) => {
            let picked: Vec<&str> = diff.bins.iter().map(|&b| labels[b].as_str()).collect();
            format!("{{{}}}", picked.join(", "))
        }
        (None, None) => unreachable!("term has edges or labels"),
    };
    format!("{tool} {} {span} ({n} bins)", diff.term)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SaveGate {
    Ok,
    Blocked { unconfirmed: Vec<CommitId> },
}

/// Applies a diff forward (`old -> new`) or backward, checking that the
/// model holds the expected starting values bit-for-bit.
pub fn apply_diff(model: &GamModel, diff: &EditDiff, forward: bool, id: &str) -> Result<GamModel> {
    let mismatch = || HistoryError::ReplayMismatch(id.to_string());
    if !diff.is_well_formed() {
        return Err(mismatch());
    }
    let t = model.term_index(&diff.term).ok_or_else(mismatch)?;
    let scores = model.terms()[t].scores();
    let (from, to) = if forward {
        (&diff.old_scores, &diff.new_scores)
    } else {
        (&diff.new_scores, &diff.old_scores)
    };
    for (&b, v) in diff.bins.iter().zip(from) {
        if scores.get(b).map(|s| s.to_bits()) != Some(v.to_bits()) {
            return Err(mismatch());
        }
    }
    Ok(model.with_term_scores(t, &diff.bins, to))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    commits: Vec<Commit>,
    /// Number of applied commits; 0 is the root.
    head: usize,
    // checkpoints[i] is the model after commit (i + 1) * CHECKPOINT_INTERVAL
    checkpoints: Vec<GamModel>,
}

impl History {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds a history, checking ids and parent links.
    pub fn from_parts(commits: Vec<Commit>, head: usize) -> Result<Self> {
        if head > commits.len() {
            return Err(HistoryError::Malformed(format!(
                "head {head} beyond {} commits",
                commits.len()
            )));
        }
        let mut parent = Revision::Root;
        for c in &commits {
            if c.parent != parent {
                return Err(HistoryError::Malformed(format!(
                    "commit `{}` has parent `{}`, expected `{parent}`",
                    c.id, c.parent
                )));
            }
            if commit_id(&c.parent, &c.diff) != c.id {
                return Err(HistoryError::ReplayMismatch(c.id.to_string()));
            }
            if c.diff.is_noop() {
                return Err(HistoryError::Malformed(format!("commit `{}` has an empty diff", c.id)));
            }
            parent = Revision::Commit(c.id.clone());
        }
        Ok(History {
            commits,
            head,
            checkpoints: Vec::new(),
        })
    }

    /// Every commit, including the redo tail after `head`.
    pub fn commits(&self) -> &[Commit] {
        &self.commits
    }

    /// Commits from the root up to and including the head.
    pub fn applied(&self) -> &[Commit] {
        &self.commits[..self.head]
    }

    pub fn head(&self) -> usize {
        self.head
    }

    pub fn head_revision(&self) -> Revision {
        match self.head {
            0 => Revision::Root,
            h => Revision::Commit(self.commits[h - 1].id.clone()),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.commits.is_empty()
    }

    pub fn can_undo(&self) -> bool {
        self.head > 0
    }

    pub fn can_redo(&self) -> bool {
        self.head < self.commits.len()
    }

    fn position(&self, rev: &Revision) -> Result<usize> {
        match rev {
            Revision::Root => Ok(0),
            Revision::Commit(id) => self
                .commits
                .iter()
                .position(|c| &c.id == id)
                .map(|p| p + 1)
                .ok_or_else(|| HistoryError::UnknownCommit(id.to_string())),
        }
    }

    pub fn get(&self, id: &CommitId) -> Option<&Commit> {
        self.commits.iter().find(|c| &c.id == id)
    }

    /// Records `diff` after the head, dropping any redo tail.
    pub fn commit(&mut self, diff: EditDiff, message: String, timestamp: u64) -> Result<&Commit> {
        if diff.is_noop() || !diff.is_well_formed() {
            return Err(HistoryError::EmptyDiff);
        }
        self.truncate_tail();
        let parent = self.head_revision();
        let id = commit_id(&parent, &diff);
        self.commits.push(Commit {
            id,
            parent,
            timestamp,
            message,
            confirmed: false,
            diff,
        });
        self.head += 1;
        Ok(self.commits.last().unwrap())
    }

    fn truncate_tail(&mut self) {
        self.commits.truncate(self.head);
        self.checkpoints.truncate(self.head / CHECKPOINT_INTERVAL);
    }

    pub fn undo(&mut self, model: &GamModel) -> Result<GamModel> {
        if self.head == 0 {
            return Err(HistoryError::NothingToUndo);
        }
        let c = &self.commits[self.head - 1];
        let m = apply_diff(model, &c.diff, false, c.id.as_str())?;
        self.head -= 1;
        Ok(m)
    }

    pub fn redo(&mut self, model: &GamModel) -> Result<GamModel> {
        if self.head == self.commits.len() {
            return Err(HistoryError::NothingToRedo);
        }
        let c = &self.commits[self.head];
        let m = apply_diff(model, &c.diff, true, c.id.as_str())?;
        self.head += 1;
        Ok(m)
    }

    /// Moves the head to `rev`, walking diffs from the current `model`.
    /// Later commits stay available until the next commit truncates them.
    pub fn checkout(&mut self, rev: &Revision, model: &GamModel) -> Result<GamModel> {
        let target = self.position(rev)?;
        let mut m = model.clone();
        let start = self.head;
        let walked = (|| {
            while self.head > target {
                m = self.undo(&m)?;
            }
            while self.head < target {
                m = self.redo(&m)?;
            }
            Ok(())
        })();
        if let Err(e) = walked {
            self.head = start;
            return Err(e);
        }
        Ok(m)
    }

    /// Model after the first `position` commits, replayed from `original`
    /// via the nearest memoized checkpoint.
    pub fn snapshot(&mut self, original: &GamModel, position: usize) -> Result<GamModel> {
        if position > self.commits.len() {
            return Err(HistoryError::Malformed(format!("no snapshot at {position}")));
        }
        let mut k = (position / CHECKPOINT_INTERVAL).min(self.checkpoints.len());
        let mut m = if k == 0 {
            original.clone()
        } else {
            self.checkpoints[k - 1].clone()
        };
        let mut at = k * CHECKPOINT_INTERVAL;
        while at < position {
            let c = &self.commits[at];
            m = apply_diff(&m, &c.diff, true, c.id.as_str())?;
            at += 1;
            if at.is_multiple_of(CHECKPOINT_INTERVAL) && at / CHECKPOINT_INTERVAL > k {
                self.checkpoints.push(m.clone());
                k += 1;
            }
        }
        Ok(m)
    }

    /// Undoes every applied commit from `head_model`, verifying each diff.
    pub fn rewind(&self, head_model: &GamModel) -> Result<GamModel> {
        let mut m = head_model.clone();
        for c in self.applied().iter().rev() {
            m = apply_diff(&m, &c.diff, false, c.id.as_str())?;
        }
        Ok(m)
    }

    pub fn confirm(&mut self, id: &CommitId) -> Result<()> {
        self.get_mut(id)?.confirmed = true;
        Ok(())
    }

    pub fn confirm_all(&mut self) {
        for c in &mut self.commits[..self.head] {
            c.confirmed = true;
        }
    }

    pub fn set_message(&mut self, id: &CommitId, message: String) -> Result<()> {
        self.get_mut(id)?.message = message;
        Ok(())
    }

    fn get_mut(&mut self, id: &CommitId) -> Result<&mut Commit> {
        self.commits
            .iter_mut()
            .find(|c| &c.id == id)
            .ok_or_else(|| HistoryError::UnknownCommit(id.to_string()))
    }

    /// Saving requires every applied commit to be confirmed.
    pub fn save_gate(&self) -> SaveGate {
        let unconfirmed: Vec<CommitId> = self
            .applied()
            .iter()
            .filter(|c| !c.confirmed)
            .map(|c| c.id.clone())
            .collect();
        if unconfirmed.is_empty() {
            SaveGate::Ok
        } else {
            SaveGate::Blocked { unconfirmed }
        }
    }
}
