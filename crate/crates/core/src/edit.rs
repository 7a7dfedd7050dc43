//! Selections and shape-function editing operators.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{GamModel, TermKind};

/// Weight given to bins without training samples in weighted operators.
pub const EMPTY_BIN_WEIGHT: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EditError {
    #[error("interaction term `{0}` cannot be edited")]
    InteractionNotEditable(String),
    #[error("invalid selection: {0}")]
    InvalidSelection(String),
    #[error("`{op}` needs an ordered axis; `{term}` is categorical")]
    RequiresOrderedAxis { op: &'static str, term: String },
    #[error("selected bins share one x position")]
    DegenerateGeometry,
    #[error("selected bins have zero total weight")]
    DegenerateCounts,
}

pub type Result<T, E = EditError> = std::result::Result<T, E>;

/// A set of bins on one term.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Selection {
    pub term: String,
    pub bins: Vec<usize>,
}

impl Selection {
    pub fn new(term: impl Into<String>, mut bins: Vec<usize>) -> Self {
        bins.sort_unstable();
        bins.dedup();
        Selection {
            term: term.into(),
            bins,
        }
    }

    /// Inclusive bin range `first..=last`.
    pub fn range(term: impl Into<String>, first: usize, last: usize) -> Self {
        Selection {
            term: term.into(),
            bins: (first..=last).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn contains(&self, bin: usize) -> bool {
        self.bins.binary_search(&bin).is_ok()
    }

    /// Checks the selection against `model` and returns the term index.
    pub fn resolve(&self, model: &GamModel) -> Result<usize> {
        let Some(idx) = model.term_index(&self.term) else {
            if model.is_interaction_name(&self.term) {
                return Err(EditError::InteractionNotEditable(self.term.clone()));
            }
            return Err(EditError::InvalidSelection(format!("unknown term `{}`", self.term)));
        };
        let term = &model.terms()[idx];
        if self.bins.is_empty() {
            return Err(EditError::InvalidSelection("no bins selected".into()));
        }
        if self.bins.windows(2).any(|w| w[0] >= w[1]) {
            return Err(EditError::InvalidSelection("bins must be sorted and unique".into()));
        }
        let last = *self.bins.last().unwrap();
        if last >= term.len() {
            return Err(EditError::InvalidSelection(format!(
                "bin {last} out of range for `{}` ({} bins)",
                self.term,
                term.len()
            )));
        }
        if term.is_continuous() && last - self.bins[0] + 1 != self.bins.len() {
            return Err(EditError::InvalidSelection(
                "continuous selections must be contiguous".into(),
            ));
        }
        Ok(idx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Increasing,
    Decreasing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Anchor {
    Left,
    Right,
    WeightedMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpolateMode {
    Linear,
    EqualBins(usize),
    Regression,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EditKind {
    /// Uniform offset added to every selected score.
    Move {
        delta: f64,
    },
    Interpolate {
        mode: InterpolateMode,
    },
    Monotonize {
        direction: Direction,
    },
    Align {
        anchor: Anchor,
    },
    Delete,
}

impl EditKind {
    /// Short tool name used in commit messages.
    pub fn tool_name(&self) -> String {
        match self {
            EditKind::Move { .. } => "move".into(),
            EditKind::Interpolate { mode } => match mode {
                InterpolateMode::Linear => "interpolate".into(),
                InterpolateMode::EqualBins(n) => format!("interpolate-equal-{n}"),
                InterpolateMode::Regression => "interpolate-regression".into(),
            },
            EditKind::Monotonize { direction } => match direction {
                Direction::Increasing => "monotonize-inc".into(),
                Direction::Decreasing => "monotonize-dec".into(),
            },
            EditKind::Align { anchor } => match anchor {
                Anchor::Left => "align-left".into(),
                Anchor::Right => "align-right".into(),
                Anchor::WeightedMean => "align-mean".into(),
            },
            EditKind::Delete => "delete".into(),
        }
    }

    fn needs_order(&self) -> Option<&'static str> {
        match self {
            EditKind::Interpolate { .. } => Some("interpolate"),
            EditKind::Monotonize { .. } => Some("monotonize"),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditOp {
    #[serde(flatten)]
    pub kind: EditKind,
    pub selection: Selection,
}

impl EditOp {
    pub fn new(kind: EditKind, selection: Selection) -> Self {
        EditOp { kind, selection }
    }
}

/// Exact before/after scores of the bins touched by one edit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditDiff {
    pub term: String,
    pub bins: Vec<usize>,
    pub old_scores: Vec<f64>,
    pub new_scores: Vec<f64>,
}

impl EditDiff {
    /// True when no bin changes value (bitwise).
    pub fn is_noop(&self) -> bool {
        self.old_scores
            .iter()
            .zip(&self.new_scores)
            .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    pub fn is_well_formed(&self) -> bool {
        self.bins.len() == self.old_scores.len() && self.bins.len() == self.new_scores.len()
    }
}

/// Applies `op` to a copy of `model`.
pub fn apply_edit(model: &GamModel, op: &EditOp) -> Result<(GamModel, EditDiff)> {
    let idx = op.selection.resolve(model)?;
    let term = &model.terms()[idx];
    if let (Some(name), TermKind::Categorical) = (op.kind.needs_order(), term.kind()) {
        return Err(EditError::RequiresOrderedAxis {
            op: name,
            term: term.name().to_string(),
        });
    }
    let bins = &op.selection.bins;
    let old: Vec<f64> = bins.iter().map(|&b| term.scores()[b]).collect();
    let weights: Vec<f64> = bins.iter().map(|&b| bin_weight(term.counts()[b])).collect();

    let new = match op.kind {
        EditKind::Move { delta } => {
            if !delta.is_finite() {
                return Err(EditError::InvalidSelection("move delta must be finite".into()));
            }
            old.iter().map(|s| s + delta).collect()
        }
        EditKind::Delete => vec![0.0; old.len()],
        EditKind::Align { anchor } => align(&old, &weights, anchor)?,
        EditKind::Monotonize { direction } => monotonize(&old, &weights, direction),
        EditKind::Interpolate { mode } => {
            let edges = term.edges().expect("continuous term");
            let xs: Vec<f64> = bins.iter().map(|&b| edges[b]).collect();
            interpolate(&xs, &old, &weights, mode)?
        }
    };

    let edited = model.with_term_scores(idx, bins, &new);
    let diff = EditDiff {
        term: term.name().to_string(),
        bins: bins.clone(),
        old_scores: old,
        new_scores: new,
    };
    Ok((edited, diff))
}

fn bin_weight(count: u64) -> f64 {
    if count == 0 {
        EMPTY_BIN_WEIGHT
    } else {
        count as f64
    }
}

/// Weighted isotonic regression by pool-adjacent-violators.
///
/// Returns the weighted least-squares projection of `scores` onto sequences
/// monotone in `direction`. Zero weights are raised to [`EMPTY_BIN_WEIGHT`].
/// Input that is already monotone is returned unchanged.
pub fn monotonize(scores: &[f64], weights: &[f64], direction: Direction) -> Vec<f64> {
    assert_eq!(scores.len(), weights.len(), "scores and weights differ in length");
    match direction {
        Direction::Increasing => pava_increasing(scores, weights),
        Direction::Decreasing => {
            let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
            pava_increasing(&neg, weights).into_iter().map(|s| -s).collect()
        }
    }
}

fn pava_increasing(ys: &[f64], weights: &[f64]) -> Vec<f64> {
    if ys.windows(2).all(|w| w[0] <= w[1]) {
        return ys.to_vec();
    }
    // blocks of (mean, weight, len)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(ys.len());
    for (&y, &w) in ys.iter().zip(weights) {
        let w = if w > 0.0 { w } else { EMPTY_BIN_WEIGHT };
        blocks.push((y, w, 1));
        while blocks.len() > 1 {
            let (m2, w2, l2) = blocks[blocks.len() - 1];
            let (m1, w1, l1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.pop();
            let w = w1 + w2;
            *blocks.last_mut().unwrap() = ((w1 * m1 + w2 * m2) / w, w, l1 + l2);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, _, len)| std::iter::repeat_n(m, len))
        .collect()
}

/// Interpolates selected scores against their bin positions `xs`.
pub fn interpolate(xs: &[f64], scores: &[f64], weights: &[f64], mode: InterpolateMode) -> Result<Vec<f64>> {
    assert_eq!(xs.len(), scores.len());
    let n = xs.len();
    if n < 2 {
        return Err(EditError::InvalidSelection(
            "interpolation needs at least two bins".into(),
        ));
    }
    let (x0, x1) = (xs[0], xs[n - 1]);
    if xs.iter().all(|&x| x == x0) {
        return Err(EditError::DegenerateGeometry);
    }
    let (y0, y1) = (scores[0], scores[n - 1]);
    // lerp form keeps both endpoints exact
    let line = |x: f64| {
        let t = (x - x0) / (x1 - x0);
        y0 * (1.0 - t) + y1 * t
    };
    match mode {
        InterpolateMode::Linear => Ok(xs.iter().map(|&x| line(x)).collect()),
        InterpolateMode::EqualBins(segments) => {
            if segments == 0 || segments > n {
                return Err(EditError::InvalidSelection(format!(
                    "equal_bins needs 1..={n} segments, got {segments}"
                )));
            }
            let width = (x1 - x0) / segments as f64;
            Ok(xs
                .iter()
                .map(|&x| {
                    let seg = (((x - x0) / width).floor() as usize).min(segments - 1);
                    line(x0 + (seg as f64 + 0.5) * width)
                })
                .collect())
        }
        InterpolateMode::Regression => {
            let (slope, icept) = weighted_ols(xs, scores, weights)?;
            Ok(xs.iter().map(|&x| icept + slope * x).collect())
        }
    }
}

fn weighted_ols(xs: &[f64], ys: &[f64], weights: &[f64]) -> Result<(f64, f64)> {
    let ws: Vec<f64> = weights
        .iter()
        .map(|&w| if w > 0.0 { w } else { EMPTY_BIN_WEIGHT })
        .collect();
    let sw: f64 = ws.iter().sum();
    let mx = xs.iter().zip(&ws).map(|(x, w)| x * w).sum::<f64>() / sw;
    let my = ys.iter().zip(&ws).map(|(y, w)| y * w).sum::<f64>() / sw;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for ((x, y), w) in xs.iter().zip(ys).zip(&ws) {
        sxy += w * (x - mx) * (y - my);
        sxx += w * (x - mx) * (x - mx);
    }
    if sxx == 0.0 {
        return Err(EditError::DegenerateGeometry);
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Sets every selected score to the anchor value.
pub fn align(scores: &[f64], weights: &[f64], anchor: Anchor) -> Result<Vec<f64>> {
    let value = match anchor {
        Anchor::Left => *scores
            .first()
            .ok_or_else(|| EditError::InvalidSelection("empty selection".into()))?,
        Anchor::Right => *scores
            .last()
            .ok_or_else(|| EditError::InvalidSelection("empty selection".into()))?,
        Anchor::WeightedMean => {
            if scores.is_empty() {
                return Err(EditError::InvalidSelection("empty selection".into()));
            }
            if scores.iter().all(|&s| s == scores[0]) {
                scores[0]
            } else {
                let total: f64 = weights.iter().sum();
                if total <= 0.0 {
                    return Err(EditError::DegenerateCounts);
                }
                scores.iter().zip(weights).map(|(s, w)| s * w).sum::<f64>() / total
            }
        }
    };
    Ok(vec![value; scores.len()])
}
