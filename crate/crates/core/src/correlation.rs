//! Linking and reordering: which other features do the samples behind a
//! selection over- or under-represent?
//!
//! For every other term we compare its bin-occupancy frequencies over the
//! affected samples with those over the whole dataset, and rank terms by the
//! Euclidean distance between the two vectors.

use serde::{Deserialize, Serialize};

use crate::edit::Selection;
use crate::metrics::{self, BinTable, Scope};
use crate::model::{GamModel, Sample, TermKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyVector {
    pub term: String,
    pub frequencies: Vec<f64>,
    /// Number of samples the frequencies were computed over.
    pub sample_count: usize,
}

impl FrequencyVector {
    /// True when computed over no samples; frequencies are then all zero.
    pub fn is_empty(&self) -> bool {
        self.sample_count == 0
    }

    /// Euclidean distance between two vectors over the same bins.
    pub fn distance(&self, other: &FrequencyVector) -> f64 {
        l2_distance(&self.frequencies, &other.frequencies)
    }
}

pub fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedTerm {
    pub term: String,
    pub kind: TermKind,
    pub distance: f64,
    pub full: FrequencyVector,
    pub selected: FrequencyVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRanking {
    pub selection: Selection,
    pub affected_count: usize,
    /// All other terms, by distance descending then name ascending.
    pub terms: Vec<RankedTerm>,
}

impl CorrelationRanking {
    pub fn continuous(&self) -> impl Iterator<Item = &RankedTerm> {
        self.terms.iter().filter(|t| t.kind == TermKind::Continuous)
    }

    pub fn categorical(&self) -> impl Iterator<Item = &RankedTerm> {
        self.terms.iter().filter(|t| t.kind == TermKind::Categorical)
    }
}

/// Samples falling in the selected bins.
pub fn affected_samples(dataset: &[Sample], selection: &Selection, model: &GamModel) -> metrics::Result<Vec<usize>> {
    metrics::resolve_scope(
        dataset,
        &Scope::Selected {
            selection: selection.clone(),
        },
        model,
    )
}

/// Bin occupancy frequencies of `term` over `subset`.
pub fn frequency_vector(table: &BinTable, model: &GamModel, term: usize, subset: &[usize]) -> FrequencyVector {
    let t = &model.terms()[term];
    let mut counts = vec![0usize; t.len()];
    for &i in subset {
        counts[table.bin(i, term)] += 1;
    }
    let n = subset.len();
    let frequencies = if n == 0 {
        vec![0.0; t.len()]
    } else {
        counts.iter().map(|&c| c as f64 / n as f64).collect()
    };
    FrequencyVector {
        term: t.name().to_string(),
        frequencies,
        sample_count: n,
    }
}

/// Ranks every term other than the selection's own.
pub fn ranking(model: &GamModel, dataset: &[Sample], selection: &Selection) -> metrics::Result<CorrelationRanking> {
    let table = BinTable::new(model, dataset)?;
    ranking_with_table(model, &table, selection)
}

/// As [`ranking`], reusing precomputed bin indices.
pub fn ranking_with_table(
    model: &GamModel,
    table: &BinTable,
    selection: &Selection,
) -> metrics::Result<CorrelationRanking> {
    let own = selection.resolve(model)?;
    let all: Vec<usize> = (0..table.len()).collect();
    let affected = table.samples_in(own, selection);
    let mut terms: Vec<RankedTerm> = (0..model.feature_count())
        .filter(|&t| t != own)
        .map(|t| {
            let full = frequency_vector(table, model, t, &all);
            let selected = frequency_vector(table, model, t, &affected);
            let distance = if selected.is_empty() || full.is_empty() {
                0.0
            } else {
                full.distance(&selected)
            };
            RankedTerm {
                term: full.term.clone(),
                kind: model.terms()[t].kind(),
                distance,
                full,
                selected,
            }
        })
        .collect();
    terms.sort_by(|a, b| b.distance.total_cmp(&a.distance).then_with(|| a.term.cmp(&b.term)));
    Ok(CorrelationRanking {
        selection: selection.clone(),
        affected_count: affected.len(),
        terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FeatureTerm, Link, Value};

    fn num(x: f64) -> Value {
        Value::Number(x)
    }

    #[test]
    fn frequency_examples() {
        let t = FeatureTerm::continuous("a", vec![0.0, 1.0, 2.0], vec![0.0; 3], vec![1; 3]).unwrap();
        let m = GamModel::new(0.0, Link::Identity, vec![t], vec![]).unwrap();
        let data: Vec<Sample> = [0.5, 0.1, 1.5]
            .iter()
            .map(|&x| Sample {
                values: vec![num(x)],
                label: 0.0,
            })
            .collect();
        let table = BinTable::new(&m, &data).unwrap();
        let f = frequency_vector(&table, &m, 0, &[0, 1, 2]);
        assert_eq!(f.frequencies, vec![2.0 / 3.0, 1.0 / 3.0, 0.0]);
        let e = frequency_vector(&table, &m, 0, &[]);
        assert!(e.is_empty());
        assert_eq!(e.frequencies, vec![0.0; 3]);
        let f = frequency_vector(&table, &m, 0, &[0, 1]);
        assert_eq!(f.frequencies, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn hand_distance() {
        let d = l2_distance(&[0.5, 0.5], &[1.0, 0.0]);
        assert!((d - 0.5f64.sqrt()).abs() <= 1e-12);
        assert_eq!(l2_distance(&[0.2, 0.8], &[0.2, 0.8]), 0.0);
    }

    #[test]
    fn correlated_companion_ranks_first_and_ties_break_by_name() {
        let mk = |n: &str| FeatureTerm::continuous(n, vec![0.0, 1.0], vec![0.0; 2], vec![1; 2]).unwrap();
        let m = GamModel::new(0.0, Link::Identity, vec![mk("x1"), mk("x2"), mk("z"), mk("b")], vec![]).unwrap();
        // x2 = x1; z and b balanced within each x1 half
        let mut data = Vec::new();
        for (x1, z, b) in [(0.0, 0.0, 0.0), (0.0, 1.0, 1.0), (1.0, 0.0, 0.0), (1.0, 1.0, 1.0)] {
            data.push(Sample {
                values: vec![num(x1), num(x1), num(z), num(b)],
                label: 0.0,
            });
        }
        let r = ranking(&m, &data, &Selection::range("x1", 0, 0)).unwrap();
        let names: Vec<&str> = r.terms.iter().map(|t| t.term.as_str()).collect();
        assert_eq!(names, vec!["x2", "b", "z"]);
        assert!((r.terms[0].distance - 0.5f64.sqrt()).abs() <= 1e-12);
        assert_eq!(r.terms[1].distance, 0.0);
        assert_eq!(r.affected_count, 2);

        let empty = ranking(&m, &data[..2], &Selection::range("x1", 1, 1)).unwrap();
        assert_eq!(empty.affected_count, 0);
        assert!(empty.terms.iter().all(|t| t.distance == 0.0 && t.selected.is_empty()));
    }
}
