//! Scoped performance metrics for the original, previous and current model.
//!
//! Bin lookups are the expensive part of scoring, and they never change
//! under editing (edits touch scores, not edges). [`BinTable`] computes them
//! once per dataset; [`ScoreCache`] keeps per-sample raw scores for one
//! model and refreshes only the samples whose bins changed value.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::edit::{EditError, Selection};
use crate::model::{GamModel, Link, ModelError, Sample, Value};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("slice `{term}` = `{label}` does not exist")]
    UnknownSlice { term: String, label: String },
    #[error(transparent)]
    Selection(#[from] EditError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("models do not share a schema")]
    SchemaMismatch,
}

pub type Result<T, E = MetricsError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scope {
    Global,
    Selected { selection: Selection },
    Slice { term: String, label: String },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub confusion: ConfusionMatrix,
    /// `None` on an empty sample set.
    pub accuracy: Option<f64>,
    /// `None` unless both classes are present.
    pub balanced_accuracy: Option<f64>,
    /// `None` unless both classes are present.
    pub auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionMetrics {
    pub rmse: Option<f64>,
    pub mae: Option<f64>,
    /// Mean of `|y - pred| / |y|` as a fraction, over samples with `y != 0`.
    pub mape: Option<f64>,
    /// Samples left out of MAPE because their label is zero.
    pub mape_excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Metrics {
    Classification(ClassificationMetrics),
    Regression(RegressionMetrics),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub scope: Scope,
    pub sample_count: usize,
    pub original: Metrics,
    pub previous: Metrics,
    pub current: Metrics,
}

/// Samples with value in a selected bin, a slice level, or all samples.
pub fn resolve_scope(dataset: &[Sample], scope: &Scope, model: &GamModel) -> Result<Vec<usize>> {
    match scope {
        Scope::Global => Ok((0..dataset.len()).collect()),
        Scope::Selected { selection } => {
            let t = selection.resolve(model)?;
            let term = &model.terms()[t];
            let mut out = Vec::new();
            for (i, s) in dataset.iter().enumerate() {
                let v = s.values.get(t).ok_or(ModelError::Dimension {
                    expected: model.feature_count(),
                    got: s.values.len(),
                })?;
                if selection.contains(term.bin_index(v)?) {
                    out.push(i);
                }
            }
            Ok(out)
        }
        Scope::Slice { term, label } => {
            let t = slice_term(model, term, label)?;
            Ok(dataset
                .iter()
                .enumerate()
                .filter(|(_, s)| matches!(s.values.get(t), Some(Value::Label(l)) if l == label))
                .map(|(i, _)| i)
                .collect())
        }
    }
}

fn slice_term(model: &GamModel, term: &str, label: &str) -> Result<usize> {
    let unknown = || MetricsError::UnknownSlice {
        term: term.to_string(),
        label: label.to_string(),
    };
    let t = model.term_index(term).ok_or_else(unknown)?;
    match model.terms()[t].labels() {
        Some(labels) if labels.iter().any(|l| l == label) => Ok(t),
        _ => Err(unknown()),
    }
}

/// Positive iff `pred >= threshold`. Labels are compared against 0.5.
pub fn confusion(preds: &[f64], labels: &[f64], threshold: f64) -> ConfusionMatrix {
    assert_eq!(preds.len(), labels.len());
    let mut cm = ConfusionMatrix::default();
    for (&p, &y) in preds.iter().zip(labels) {
        match (p >= threshold, y >= 0.5) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, false) => cm.tn += 1,
            (false, true) => cm.fn_ += 1,
        }
    }
    cm
}

/// Area under the ROC curve as the Mann-Whitney pair statistic: the share
/// of (positive, negative) pairs ranked correctly, ties counting one half.
pub fn auc(preds: &[f64], labels: &[f64]) -> Option<f64> {
    assert_eq!(preds.len(), labels.len());
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| preds[a].total_cmp(&preds[b]));
    let (mut pos, mut neg) = (0u128, 0u128);
    // twice the number of correctly ordered pairs, kept integral
    let mut twice_correct = 0u128;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut gp, mut gn) = (0u128, 0u128);
        while j < order.len() && preds[order[j]] == preds[order[i]] {
            if labels[order[j]] >= 0.5 {
                gp += 1;
            } else {
                gn += 1;
            }
            j += 1;
        }
        twice_correct += 2 * gp * neg + gp * gn;
        pos += gp;
        neg += gn;
        i = j;
    }
    if pos == 0 || neg == 0 {
        return None;
    }
    Some(twice_correct as f64 / (2 * pos * neg) as f64)
}

pub fn classification_metrics(preds: &[f64], labels: &[f64], threshold: f64) -> ClassificationMetrics {
    let cm = confusion(preds, labels, threshold);
    let n = cm.total();
    let accuracy = (n > 0).then(|| (cm.tp + cm.tn) as f64 / n as f64);
    let (p, q) = (cm.tp + cm.fn_, cm.tn + cm.fp);
    let balanced_accuracy = (p > 0 && q > 0).then(|| (cm.tp as f64 / p as f64 + cm.tn as f64 / q as f64) / 2.0);
    ClassificationMetrics {
        confusion: cm,
        accuracy,
        balanced_accuracy,
        auc: auc(preds, labels),
    }
}

pub fn regression_metrics(preds: &[f64], labels: &[f64]) -> RegressionMetrics {
    assert_eq!(preds.len(), labels.len());
    let n = preds.len();
    if n == 0 {
        return RegressionMetrics {
            rmse: None,
            mae: None,
            mape: None,
            mape_excluded: 0,
        };
    }
    let (mut sq, mut abs, mut pct) = (0.0, 0.0, 0.0);
    let mut pct_n = 0usize;
    for (&p, &y) in preds.iter().zip(labels) {
        let r = y - p;
        sq += r * r;
        abs += r.abs();
        if y != 0.0 {
            pct += (r / y).abs();
            pct_n += 1;
        }
    }
    RegressionMetrics {
        rmse: Some((sq / n as f64).sqrt()),
        mae: Some(abs / n as f64),
        mape: (pct_n > 0).then(|| pct / pct_n as f64),
        mape_excluded: n - pct_n,
    }
}

fn metrics_for(link: Link, preds: &[f64], labels: &[f64], threshold: f64) -> Metrics {
    match link {
        Link::Logit => Metrics::Classification(classification_metrics(preds, labels, threshold)),
        Link::Identity => Metrics::Regression(regression_metrics(preds, labels)),
    }
}

/// Scores `subset` of `dataset` with `model` from scratch.
pub fn evaluate(model: &GamModel, dataset: &[Sample], subset: &[usize], threshold: f64) -> Result<Metrics> {
    let mut preds = Vec::with_capacity(subset.len());
    let mut labels = Vec::with_capacity(subset.len());
    for &i in subset {
        preds.push(model.predict(&dataset[i])?);
        labels.push(dataset[i].label);
    }
    Ok(metrics_for(model.link(), &preds, &labels, threshold))
}

#[derive(Debug, Clone, Copy)]
pub struct ModelTriple<'a> {
    pub original: &'a GamModel,
    pub previous: &'a GamModel,
    pub current: &'a GamModel,
}

/// From-scratch report: every sample rescored through [`GamModel::predict`].
pub fn report(models: ModelTriple<'_>, dataset: &[Sample], scope: &Scope, threshold: f64) -> Result<MetricReport> {
    if !models.original.same_schema(models.current) || !models.previous.same_schema(models.current) {
        return Err(MetricsError::SchemaMismatch);
    }
    let subset = resolve_scope(dataset, scope, models.current)?;
    Ok(MetricReport {
        scope: scope.clone(),
        sample_count: subset.len(),
        original: evaluate(models.original, dataset, &subset, threshold)?,
        previous: evaluate(models.previous, dataset, &subset, threshold)?,
        current: evaluate(models.current, dataset, &subset, threshold)?,
    })
}

/// Bin index of every (sample, term) pair, sample-major.
#[derive(Debug, Clone)]
pub struct BinTable {
    terms: usize,
    bins: Vec<usize>,
    labels: Vec<f64>,
}

impl BinTable {
    pub fn new(model: &GamModel, dataset: &[Sample]) -> Result<Self> {
        let terms = model.feature_count();
        let mut bins = Vec::with_capacity(terms * dataset.len());
        for s in dataset {
            bins.extend(model.sample_bins(s)?);
        }
        Ok(BinTable {
            terms,
            bins,
            labels: dataset.iter().map(|s| s.label).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn sample(&self, i: usize) -> &[usize] {
        &self.bins[i * self.terms..(i + 1) * self.terms]
    }

    pub fn bin(&self, sample: usize, term: usize) -> usize {
        self.bins[sample * self.terms + term]
    }

    /// Samples falling in any selected bin of `term`.
    pub fn samples_in(&self, term: usize, selection: &Selection) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| selection.contains(self.bin(i, term)))
            .collect()
    }
}

/// Per-sample raw scores of one model, refreshed incrementally.
#[derive(Debug, Clone)]
pub struct ScoreCache {
    raw: Vec<f64>,
    snapshot: GamModel,
}

impl ScoreCache {
    pub fn new(model: &GamModel, table: &BinTable) -> Self {
        let raw = (0..table.len())
            .map(|i| model.raw_score_from_bins(table.sample(i)))
            .collect();
        ScoreCache {
            raw,
            snapshot: model.clone(),
        }
    }

    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    pub fn model(&self) -> &GamModel {
        &self.snapshot
    }

    /// Brings the cache up to date with `model`, which must share the
    /// cached model's schema. Only samples sitting in a bin whose score
    /// changed are rescored.
    pub fn sync(&mut self, model: &GamModel, table: &BinTable) {
        if model == &self.snapshot {
            return;
        }
        if !model.same_schema(&self.snapshot)
            || model.intercept().to_bits() != self.snapshot.intercept().to_bits()
            || model.interactions() != self.snapshot.interactions()
        {
            *self = ScoreCache::new(model, table);
            return;
        }
        // changed[t] lists the bins of term t with new scores
        let changed: Vec<(usize, Vec<bool>)> = model
            .terms()
            .iter()
            .zip(self.snapshot.terms())
            .enumerate()
            .filter_map(|(t, (new, old))| {
                let mask: Vec<bool> = new
                    .scores()
                    .iter()
                    .zip(old.scores())
                    .map(|(a, b)| a.to_bits() != b.to_bits())
                    .collect();
                mask.iter().any(|&c| c).then_some((t, mask))
            })
            .collect();
        for i in 0..table.len() {
            if changed.iter().any(|(t, mask)| mask[table.bin(i, *t)]) {
                self.raw[i] = model.raw_score_from_bins(table.sample(i));
            }
        }
        self.snapshot = model.clone();
    }

    fn metrics(&self, subset: &[usize], labels: &[f64], threshold: f64) -> Metrics {
        let link = self.snapshot.link();
        let preds: Vec<f64> = subset.iter().map(|&i| link.apply(self.raw[i])).collect();
        let ys: Vec<f64> = subset.iter().map(|&i| labels[i]).collect();
        metrics_for(link, &preds, &ys, threshold)
    }
}

/// Incremental evaluator over one dataset for the three model roles.
#[derive(Debug, Clone)]
pub struct Evaluator {
    table: Arc<BinTable>,
    pub threshold: f64,
    original: ScoreCache,
    previous: ScoreCache,
    current: ScoreCache,
}

impl Evaluator {
    pub fn new(original: &GamModel, dataset: &[Sample], threshold: f64) -> Result<Self> {
        let table = Arc::new(BinTable::new(original, dataset)?);
        let cache = ScoreCache::new(original, &table);
        Ok(Evaluator {
            table,
            threshold,
            original: cache.clone(),
            previous: cache.clone(),
            current: cache,
        })
    }

    pub fn table(&self) -> &BinTable {
        &self.table
    }

    /// Updates the cached previous and current models.
    pub fn sync(&mut self, previous: &GamModel, current: &GamModel) -> Result<()> {
        if !previous.same_schema(self.original.model()) || !current.same_schema(self.original.model()) {
            return Err(MetricsError::SchemaMismatch);
        }
        // previous usually equals the old current after a commit
        if previous == self.current.model() && current != self.current.model() {
            std::mem::swap(&mut self.previous, &mut self.current);
            self.current = self.previous.clone();
        }
        self.previous.sync(previous, &self.table);
        self.current.sync(current, &self.table);
        Ok(())
    }

    pub fn current_raw(&self) -> &[f64] {
        self.current.raw()
    }

    pub fn subset(&self, scope: &Scope) -> Result<Vec<usize>> {
        let model = self.current.model();
        match scope {
            Scope::Global => Ok((0..self.table.len()).collect()),
            Scope::Selected { selection } => {
                let t = selection.resolve(model)?;
                Ok(self.table.samples_in(t, selection))
            }
            Scope::Slice { term, label } => {
                let t = slice_term(model, term, label)?;
                let bin = model.terms()[t]
                    .labels()
                    .and_then(|ls| ls.iter().position(|l| l == label))
                    .expect("slice label resolved");
                Ok((0..self.table.len()).filter(|&i| self.table.bin(i, t) == bin).collect())
            }
        }
    }

    pub fn report(&self, scope: &Scope) -> Result<MetricReport> {
        let subset = self.subset(scope)?;
        let labels = self.table.labels();
        Ok(MetricReport {
            scope: scope.clone(),
            sample_count: subset.len(),
            original: self.original.metrics(&subset, labels, self.threshold),
            previous: self.previous.metrics(&subset, labels, self.threshold),
            current: self.current.metrics(&subset, labels, self.threshold),
        })
    }
}
