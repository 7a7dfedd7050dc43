//! Shared generators, fixtures and brute-force oracles for integration tests.
//!
//! The oracles here deliberately avoid the library's own algorithms.

#![allow(dead_code)]

use gam_edit::edit::{Anchor, Direction, EditKind, EditOp, InterpolateMode, Selection};
use gam_edit::model::{Bins, FeatureTerm, GamModel, InteractionTerm, Link, Sample, Value, MISSING};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Scores drawn on a 1/8 grid half the time so ties and exact sums occur.
fn score(rng: &mut ChaCha8Rng) -> f64 {
    if rng.gen_bool(0.5) {
        rng.gen_range(-16i32..=16) as f64 / 8.0
    } else {
        rng.gen_range(-3.0..3.0)
    }
}

pub fn random_term(rng: &mut ChaCha8Rng, name: &str, max_bins: usize) -> FeatureTerm {
    let n = rng.gen_range(1..=max_bins);
    let scores = (0..n).map(|_| score(rng)).collect();
    let mut counts: Vec<u64> = (0..n)
        .map(|_| if rng.gen_bool(0.15) { 0 } else { rng.gen_range(1..40) })
        .collect();
    if counts.iter().all(|&c| c == 0) {
        counts[0] = 1;
    }
    let stddev = rng
        .gen_bool(0.3)
        .then(|| (0..n).map(|_| rng.gen_range(0.0..0.5)).collect());
    let bins = if rng.gen_bool(0.65) {
        let mut x = rng.gen_range(-50.0..50.0f64).round();
        let edges = (0..n)
            .map(|_| {
                let e = x;
                x += rng.gen_range(1..20) as f64 * if rng.gen_bool(0.3) { 0.5 } else { 1.0 };
                e
            })
            .collect();
        Bins::Continuous(edges)
    } else {
        let mut labels: Vec<String> = (0..n).map(|i| format!("{name}_v{i}")).collect();
        if n > 1 && rng.gen_bool(0.3) {
            labels[n - 1] = MISSING.to_string();
        }
        Bins::Categorical(labels)
    };
    FeatureTerm::new(name, bins, scores, counts, stddev).unwrap()
}

pub fn random_model(rng: &mut ChaCha8Rng, max_terms: usize, max_bins: usize, interactions: bool) -> GamModel {
    let k = rng.gen_range(1..=max_terms);
    let terms: Vec<FeatureTerm> = (0..k).map(|i| random_term(rng, &format!("f{i}"), max_bins)).collect();
    let mut inter = Vec::new();
    if interactions && k >= 2 {
        for _ in 0..rng.gen_range(0..=2) {
            let a = rng.gen_range(0..k);
            let mut b = rng.gen_range(0..k);
            if a == b {
                b = (a + 1) % k;
            }
            let grid = (0..terms[a].len())
                .map(|_| (0..terms[b].len()).map(|_| score(rng)).collect())
                .collect();
            inter.push(InteractionTerm {
                feature_a: terms[a].name().to_string(),
                feature_b: terms[b].name().to_string(),
                scores: grid,
            });
        }
    }
    let link = if rng.gen_bool(0.6) { Link::Logit } else { Link::Identity };
    GamModel::new(score(rng), link, terms, inter).unwrap()
}

pub fn random_value(rng: &mut ChaCha8Rng, term: &FeatureTerm) -> Value {
    match &term.bins() {
        Bins::Continuous(edges) => {
            let lo = edges[0] - 10.0;
            let hi = edges[edges.len() - 1] + 10.0;
            if rng.gen_bool(0.2) {
                // exactly on an edge
                Value::Number(*edges.choose(rng).unwrap())
            } else {
                Value::Number(rng.gen_range(lo..hi))
            }
        }
        Bins::Categorical(labels) => Value::Label(labels.choose(rng).unwrap().clone()),
    }
}

pub fn random_samples(rng: &mut ChaCha8Rng, model: &GamModel, n: usize) -> Vec<Sample> {
    (0..n)
        .map(|_| {
            let values = model.terms().iter().map(|t| random_value(rng, t)).collect();
            let label = match model.link() {
                Link::Logit => rng.gen_range(0..=1) as f64,
                Link::Identity => {
                    if rng.gen_bool(0.1) {
                        0.0
                    } else {
                        rng.gen_range(-20.0..20.0)
                    }
                }
            };
            Sample { values, label }
        })
        .collect()
}

/// A random valid edit on a random univariate term.
pub fn random_op(rng: &mut ChaCha8Rng, model: &GamModel) -> EditOp {
    let t = &model.terms()[rng.gen_range(0..model.feature_count())];
    let n = t.len();
    let bins: Vec<usize> = if t.is_continuous() {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(a..n);
        (a..=b).collect()
    } else {
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(rng);
        all.truncate(rng.gen_range(1..=n));
        all
    };
    let len = bins.len();
    let mut kinds = vec![
        EditKind::Move {
            delta: rng.gen_range(-16i32..=16) as f64 / 4.0,
        },
        EditKind::Delete,
        EditKind::Align {
            anchor: *[Anchor::Left, Anchor::Right, Anchor::WeightedMean].choose(rng).unwrap(),
        },
    ];
    if t.is_continuous() {
        kinds.push(EditKind::Monotonize {
            direction: if rng.gen_bool(0.5) {
                Direction::Increasing
            } else {
                Direction::Decreasing
            },
        });
        if len >= 2 {
            let mode = match rng.gen_range(0..3) {
                0 => InterpolateMode::Linear,
                1 => InterpolateMode::EqualBins(rng.gen_range(1..=len)),
                _ => InterpolateMode::Regression,
            };
            kinds.push(EditKind::Interpolate { mode });
        }
    }
    EditOp::new(*kinds.choose(rng).unwrap(), Selection::new(t.name(), bins))
}

/// Exact weighted isotonic regression by exhaustive search.
///
/// The optimum is constant on contiguous blocks, each at its weighted mean.
/// Enumerates every contiguous partition, keeps the monotone ones, and
/// returns the one with least weighted squared error.
pub fn brute_force_isotonic(ys: &[f64], ws: &[f64]) -> Vec<f64> {
    let n = ys.len();
    if n == 0 {
        return Vec::new();
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << (n - 1)) {
        // bit i set: a block boundary after position i
        let mut fitted = vec![0.0; n];
        let mut start = 0;
        for end in 1..=n {
            if end == n || mask & (1 << (end - 1)) != 0 {
                let w: f64 = ws[start..end].iter().sum();
                let m = ys[start..end]
                    .iter()
                    .zip(&ws[start..end])
                    .map(|(y, w)| y * w)
                    .sum::<f64>()
                    / w;
                fitted[start..end].iter_mut().for_each(|f| *f = m);
                start = end;
            }
        }
        if fitted.windows(2).any(|p| p[0] > p[1] + 1e-12) {
            continue;
        }
        let loss: f64 = fitted
            .iter()
            .zip(ys)
            .zip(ws)
            .map(|((f, y), w)| w * (f - y) * (f - y))
            .sum();
        if best.as_ref().is_none_or(|(b, _)| loss < *b) {
            best = Some((loss, fitted));
        }
    }
    best.unwrap().1
}

/// All-pairs Mann-Whitney AUC with half credit for ties.
pub fn brute_force_auc(preds: &[f64], labels: &[f64]) -> Option<f64> {
    let mut num = 0.0;
    let mut pairs = 0u64;
    for (i, &pi) in preds.iter().enumerate() {
        if labels[i] != 1.0 {
            continue;
        }
        for (j, &pj) in preds.iter().enumerate() {
            if labels[j] != 0.0 {
                continue;
            }
            pairs += 1;
            if pi > pj {
                num += 1.0;
            } else if pi == pj {
                num += 0.5;
            }
        }
    }
    (pairs > 0).then(|| num / pairs as f64)
}

/// (tp, fp, tn, fn) by direct counting.
pub fn brute_force_confusion(preds: &[f64], labels: &[f64], threshold: f64) -> (u64, u64, u64, u64) {
    let count = |pos: bool, y: f64| {
        preds
            .iter()
            .zip(labels)
            .filter(|(p, l)| (**p >= threshold) == pos && **l == y)
            .count() as u64
    };
    (count(true, 1.0), count(true, 0.0), count(false, 0.0), count(false, 1.0))
}

/// Pneumonia-like model: Age in one-year bins 18..=106 with an abrupt
/// rise from 86 to 87 and a drop after 100, plus a binary Asthma term
/// that lowers risk and a categorical Gender term.
pub fn pneumonia_model() -> GamModel {
    let ages: Vec<f64> = (18..=106).map(f64::from).collect();
    let scores: Vec<f64> = ages
        .iter()
        .map(|&a| {
            let base = -1.2 + 0.02 * (a - 18.0);
            let bump = if (81.0..=86.0).contains(&a) {
                -0.3 + 0.03 * (a - 81.0)
            } else {
                0.0
            };
            let jump = if a >= 87.0 { 0.25 } else { 0.0 };
            let plunge = if a >= 100.0 { -0.9 } else { 0.0 };
            let wiggle = 0.01 * ((a * 0.7).sin());
            base + bump + jump + plunge + wiggle
        })
        .collect();
    let counts: Vec<u64> = ages
        .iter()
        .map(|&a| {
            if a < 90.0 {
                40
            } else if a < 100.0 {
                12
            } else {
                3
            }
        })
        .collect();
    let age = FeatureTerm::continuous("Age", ages, scores, counts).unwrap();
    let asthma = FeatureTerm::categorical("Asthma", ["false", "true"], vec![0.05, -0.45], vec![2800, 300]).unwrap();
    let gender = FeatureTerm::categorical("Gender", ["female", "male"], vec![-0.02, 0.02], vec![1600, 1500]).unwrap();
    let bun = FeatureTerm::continuous(
        "BUN",
        vec![0.0, 10.0, 20.0, 30.0, 50.0],
        vec![-0.4, -0.1, 0.1, 0.4, 0.8],
        vec![500, 1200, 800, 400, 200],
    )
    .unwrap();
    GamModel::new(-2.0, Link::Logit, vec![age, asthma, gender, bun], vec![])
        .unwrap()
        .recenter()
        .unwrap()
}

/// Validation samples for [`pneumonia_model`]: exactly 28 patients aged
/// 86 or older, who are disproportionately female.
pub fn pneumonia_samples(seed: u64) -> Vec<Sample> {
    let mut r = rng(seed);
    let mut out = Vec::new();
    for i in 0..400 {
        let old = i < 28;
        let age = if old {
            r.gen_range(86..=106) as f64
        } else {
            r.gen_range(18..86) as f64
        };
        let female = if old { i % 4 != 0 } else { r.gen_bool(0.5) };
        let asthma = r.gen_bool(0.1);
        let bun = r.gen_range(0.0..70.0);
        let p = (age - 18.0) / 120.0 + if asthma { -0.05 } else { 0.0 } + bun / 400.0;
        out.push(Sample {
            values: vec![
                Value::Number(age),
                Value::Label(if asthma { "true" } else { "false" }.into()),
                Value::Label(if female { "female" } else { "male" }.into()),
                Value::Number(bun),
            ],
            label: if r.gen_bool(p.clamp(0.02, 0.98)) { 1.0 } else { 0.0 },
        });
    }
    out
}

/// A continuous-term model with `terms` features of `bins` bins each.
pub fn wide_model(rng: &mut ChaCha8Rng, terms: usize, bins: usize) -> GamModel {
    let ts = (0..terms)
        .map(|i| {
            let edges = (0..bins).map(|b| b as f64).collect();
            let scores = (0..bins).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let counts = (0..bins).map(|_| rng.gen_range(1..100)).collect();
            FeatureTerm::continuous(format!("x{i}"), edges, scores, counts).unwrap()
        })
        .collect();
    GamModel::new(0.0, Link::Logit, ts, vec![]).unwrap()
}

pub fn wide_samples(rng: &mut ChaCha8Rng, model: &GamModel, n: usize) -> Vec<Sample> {
    (0..n)
        .map(|_| Sample {
            values: model
                .terms()
                .iter()
                .map(|t| Value::Number(rng.gen_range(0.0..t.len() as f64)))
                .collect(),
            label: rng.gen_range(0..=1) as f64,
        })
        .collect()
}
