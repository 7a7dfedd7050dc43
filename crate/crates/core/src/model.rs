//! Binned GAM representation and inference.
//!
//! A model is an intercept plus one piecewise-constant shape function per
//! feature (and optional pairwise interaction grids), passed through a link
//! function. Models are immutable values: every edit produces a new model.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Label used for categorical values that are absent from the input row.
pub const MISSING: &str = "MISSING";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("term `{term}` has no bin for category `{label}`")]
    UnknownCategory { term: String, label: String },
    #[error("term `{term}` received a {got} value")]
    ValueKind { term: String, got: &'static str },
    #[error("term `{term}` has zero total training count")]
    DegenerateCounts { term: String },
    #[error("sample has {got} values, model has {expected} features")]
    Dimension { expected: usize, got: usize },
    #[error("invalid model: {0}")]
    Invalid(String),
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    /// Binary classification; predictions are probabilities.
    Logit,
    /// Regression; predictions are in target units.
    Identity,
}

impl Link {
    pub fn apply(self, raw: f64) -> f64 {
        match self {
            Link::Identity => raw,
            Link::Logit => sigmoid(raw),
        }
    }

    pub fn is_classification(self) -> bool {
        matches!(self, Link::Logit)
    }
}

fn sigmoid(x: f64) -> f64 {
    // both branches avoid exp overflow
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// How a term partitions its input axis.
#[derive(Debug, Clone, PartialEq)]
pub enum Bins {
    /// Left edge of each bin, strictly increasing.
    Continuous(Vec<f64>),
    /// One unique label per bin.
    Categorical(Vec<String>),
}

impl Bins {
    pub fn len(&self) -> usize {
        match self {
            Bins::Continuous(e) => e.len(),
            Bins::Categorical(l) => l.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self, Bins::Continuous(_))
    }

    pub fn kind(&self) -> TermKind {
        match self {
            Bins::Continuous(_) => TermKind::Continuous,
            Bins::Categorical(_) => TermKind::Categorical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TermKind {
    Continuous,
    Categorical,
}

/// One feature value of a sample.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Label(String),
}

impl Value {
    pub fn missing() -> Self {
        Value::Label(MISSING.to_string())
    }

    fn kind_name(&self) -> &'static str {
        match self {
            Value::Number(_) => "numeric",
            Value::Label(_) => "categorical",
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Number(x) => write!(f, "{x}"),
            Value::Label(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// One value per univariate term, in model order.
    pub values: Vec<Value>,
    pub label: f64,
}

/// A single shape function.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTerm {
    name: String,
    bins: Bins,
    scores: Vec<f64>,
    counts: Vec<u64>,
    stddev: Option<Vec<f64>>,
}

impl FeatureTerm {
    pub fn new(
        name: impl Into<String>,
        bins: Bins,
        scores: Vec<f64>,
        counts: Vec<u64>,
        stddev: Option<Vec<f64>>,
    ) -> Result<Self> {
        let term = FeatureTerm {
            name: name.into(),
            bins,
            scores,
            counts,
            stddev,
        };
        term.validate()?;
        Ok(term)
    }

    pub fn continuous(name: impl Into<String>, edges: Vec<f64>, scores: Vec<f64>, counts: Vec<u64>) -> Result<Self> {
        Self::new(name, Bins::Continuous(edges), scores, counts, None)
    }

    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        labels: impl IntoIterator<Item = S>,
        scores: Vec<f64>,
        counts: Vec<u64>,
    ) -> Result<Self> {
        let labels = labels.into_iter().map(Into::into).collect();
        Self::new(name, Bins::Categorical(labels), scores, counts, None)
    }

    fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(ModelError::Invalid(format!("term `{}`: {msg}", self.name)));
        if self.name.is_empty() {
            return Err(ModelError::Invalid("term name is empty".into()));
        }
        let n = self.bins.len();
        if n == 0 {
            return invalid("no bins".into());
        }
        if self.scores.len() != n {
            return invalid(format!("{} scores for {n} bins", self.scores.len()));
        }
        if self.counts.len() != n {
            return invalid(format!("{} counts for {n} bins", self.counts.len()));
        }
        if let Some(sd) = &self.stddev {
            if sd.len() != n {
                return invalid(format!("{} stddev values for {n} bins", sd.len()));
            }
            if sd.iter().any(|s| !s.is_finite() || *s < 0.0) {
                return invalid("stddev must be finite and non-negative".into());
            }
        }
        if self.scores.iter().any(|s| !s.is_finite()) {
            return invalid("scores must be finite".into());
        }
        match &self.bins {
            Bins::Continuous(edges) => {
                if edges.iter().any(|e| !e.is_finite()) {
                    return invalid("bin edges must be finite".into());
                }
                if edges.windows(2).any(|w| w[0] >= w[1]) {
                    return invalid("bin edges must be strictly increasing".into());
                }
            }
            Bins::Categorical(labels) => {
                let mut seen = std::collections::HashSet::new();
                for l in labels {
                    if !seen.insert(l.as_str()) {
                        return invalid(format!("duplicate label `{l}`"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn bins(&self) -> &Bins {
        &self.bins
    }

    pub fn kind(&self) -> TermKind {
        self.bins.kind()
    }

    pub fn is_continuous(&self) -> bool {
        self.bins.is_continuous()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn stddev(&self) -> Option<&[f64]> {
        self.stddev.as_deref()
    }

    pub fn edges(&self) -> Option<&[f64]> {
        match &self.bins {
            Bins::Continuous(e) => Some(e),
            Bins::Categorical(_) => None,
        }
    }

    pub fn labels(&self) -> Option<&[String]> {
        match &self.bins {
            Bins::Categorical(l) => Some(l),
            Bins::Continuous(_) => None,
        }
    }

    /// Returns a copy of this term with `scores[bins[k]] = values[k]`.
    pub(crate) fn with_scores_at(&self, bins: &[usize], values: &[f64]) -> FeatureTerm {
        let mut t = self.clone();
        for (&b, &v) in bins.iter().zip(values) {
            t.scores[b] = v;
        }
        t
    }

    /// Bin holding `value`. Continuous values outside the edge range clamp
    /// to the first or last bin.
    pub fn bin_index(&self, value: &Value) -> Result<usize> {
        match (&self.bins, value) {
            (Bins::Continuous(edges), Value::Number(x)) => Ok(continuous_bin(edges, *x)),
            (Bins::Categorical(labels), Value::Label(l)) => {
                labels
                    .iter()
                    .position(|b| b == l)
                    .ok_or_else(|| ModelError::UnknownCategory {
                        term: self.name.clone(),
                        label: l.clone(),
                    })
            }
            (_, v) => Err(ModelError::ValueKind {
                term: self.name.clone(),
                got: v.kind_name(),
            }),
        }
    }

    /// Bin holding the numeric value `x` on a continuous term.
    pub fn bin_of(&self, x: f64) -> Option<usize> {
        self.edges().map(|e| continuous_bin(e, x))
    }

    pub fn total_count(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Count-weighted mean of `|score|`.
    pub fn importance(&self) -> Result<f64> {
        let total = self.total_count();
        if total == 0 {
            return Err(ModelError::DegenerateCounts {
                term: self.name.clone(),
            });
        }
        let sum: f64 = self
            .scores
            .iter()
            .zip(&self.counts)
            .map(|(s, &c)| c as f64 * s.abs())
            .sum();
        Ok(sum / total as f64)
    }

    /// Count-weighted mean of the scores.
    pub fn weighted_mean(&self) -> Result<f64> {
        let total = self.total_count();
        if total == 0 {
            return Err(ModelError::DegenerateCounts {
                term: self.name.clone(),
            });
        }
        let sum: f64 = self.scores.iter().zip(&self.counts).map(|(s, &c)| c as f64 * s).sum();
        Ok(sum / total as f64)
    }
}

fn continuous_bin(edges: &[f64], x: f64) -> usize {
    // NaN compares false everywhere and lands in bin 0
    edges.partition_point(|&e| e <= x).saturating_sub(1)
}

/// Pairwise interaction grid. Used for inference only.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionTerm {
    pub feature_a: String,
    pub feature_b: String,
    /// `scores[i][j]` for bin `i` of `feature_a` and bin `j` of `feature_b`.
    pub scores: Vec<Vec<f64>>,
}

impl InteractionTerm {
    pub fn name(&self) -> String {
        format!("{} x {}", self.feature_a, self.feature_b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GamModel {
    intercept: f64,
    link: Link,
    terms: Vec<FeatureTerm>,
    interactions: Vec<InteractionTerm>,
    // (term index of a, term index of b) per interaction
    pair_index: Vec<(usize, usize)>,
    name_index: HashMap<String, usize>,
}

impl GamModel {
    pub fn new(
        intercept: f64,
        link: Link,
        terms: Vec<FeatureTerm>,
        interactions: Vec<InteractionTerm>,
    ) -> Result<Self> {
        if !intercept.is_finite() {
            return Err(ModelError::Invalid("intercept must be finite".into()));
        }
        let mut name_index = HashMap::with_capacity(terms.len());
        for (i, t) in terms.iter().enumerate() {
            t.validate()?;
            if name_index.insert(t.name.clone(), i).is_some() {
                return Err(ModelError::Invalid(format!("duplicate term name `{}`", t.name)));
            }
        }
        let mut pair_index = Vec::with_capacity(interactions.len());
        for it in &interactions {
            let lookup = |n: &str| {
                name_index
                    .get(n)
                    .copied()
                    .ok_or_else(|| ModelError::Invalid(format!("interaction references unknown term `{n}`")))
            };
            let (a, b) = (lookup(&it.feature_a)?, lookup(&it.feature_b)?);
            let (na, nb) = (terms[a].len(), terms[b].len());
            if it.scores.len() != na || it.scores.iter().any(|row| row.len() != nb) {
                return Err(ModelError::Invalid(format!(
                    "interaction `{}` grid must be {na}x{nb}",
                    it.name()
                )));
            }
            if it.scores.iter().flatten().any(|s| !s.is_finite()) {
                return Err(ModelError::Invalid(format!(
                    "interaction `{}` has non-finite scores",
                    it.name()
                )));
            }
            pair_index.push((a, b));
        }
        Ok(GamModel {
            intercept,
            link,
            terms,
            interactions,
            pair_index,
            name_index,
        })
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn link(&self) -> Link {
        self.link
    }

    pub fn terms(&self) -> &[FeatureTerm] {
        &self.terms
    }

    pub fn interactions(&self) -> &[InteractionTerm] {
        &self.interactions
    }

    pub fn feature_count(&self) -> usize {
        self.terms.len()
    }

    pub fn term_index(&self, name: &str) -> Option<usize> {
        self.name_index.get(name).copied()
    }

    pub fn term(&self, name: &str) -> Option<&FeatureTerm> {
        self.term_index(name).map(|i| &self.terms[i])
    }

    pub fn is_interaction_name(&self, name: &str) -> bool {
        self.interactions.iter().any(|it| it.name() == name)
    }

    /// True when both models have identical term names, kinds, bins and
    /// interaction structure (scores may differ).
    pub fn same_schema(&self, other: &GamModel) -> bool {
        self.link == other.link
            && self.terms.len() == other.terms.len()
            && self
                .terms
                .iter()
                .zip(&other.terms)
                .all(|(a, b)| a.name == b.name && a.bins == b.bins)
            && self.pair_index == other.pair_index
    }

    /// New model with selected scores of one term replaced.
    pub(crate) fn with_term_scores(&self, term: usize, bins: &[usize], values: &[f64]) -> GamModel {
        let mut m = self.clone();
        m.terms[term] = self.terms[term].with_scores_at(bins, values);
        m
    }

    /// Bin index of every term for one sample.
    pub fn sample_bins(&self, sample: &Sample) -> Result<Vec<usize>> {
        if sample.values.len() != self.terms.len() {
            return Err(ModelError::Dimension {
                expected: self.terms.len(),
                got: sample.values.len(),
            });
        }
        self.terms
            .iter()
            .zip(&sample.values)
            .map(|(t, v)| t.bin_index(v))
            .collect()
    }

    /// Raw additive score from precomputed per-term bin indices.
    ///
    /// Summation order is fixed (intercept, terms, interactions) so that
    /// every path that scores a sample produces the same bits.
    pub fn raw_score_from_bins(&self, bins: &[usize]) -> f64 {
        let mut acc = self.intercept;
        for (t, &b) in self.terms.iter().zip(bins) {
            acc += t.scores[b];
        }
        for (it, &(a, b)) in self.interactions.iter().zip(&self.pair_index) {
            acc += it.scores[bins[a]][bins[b]];
        }
        acc
    }

    pub fn raw_score(&self, sample: &Sample) -> Result<f64> {
        let bins = self.sample_bins(sample)?;
        Ok(self.raw_score_from_bins(&bins))
    }

    pub fn predict(&self, sample: &Sample) -> Result<f64> {
        Ok(self.link.apply(self.raw_score(sample)?))
    }

    /// Shift every term so its count-weighted mean score is zero, moving
    /// the offsets into the intercept. Interaction grids are left as-is.
    pub fn recenter(&self) -> Result<GamModel> {
        let mut m = self.clone();
        for t in &mut m.terms {
            let total = t.total_count();
            if total == 0 {
                return Err(ModelError::DegenerateCounts { term: t.name.clone() });
            }
            // A second pass removes the rounding residue of the first.
            for _ in 0..2 {
                let mean = t.weighted_mean()?;
                if mean.abs() <= CENTERED_TOL {
                    break;
                }
                for s in &mut t.scores {
                    *s -= mean;
                }
                m.intercept += mean;
            }
        }
        Ok(m)
    }
}

/// Weighted means at or below this magnitude count as centered.
pub const CENTERED_TOL: f64 = 1e-12;

/// Count-weighted mean |score| of a term.
pub fn feature_importance(term: &FeatureTerm) -> Result<f64> {
    term.importance()
}
