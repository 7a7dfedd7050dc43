mod common;

use common::*;
use gam_edit::correlation::{self, l2_distance};
use gam_edit::edit::{
    align, apply_edit, interpolate, monotonize, Anchor, Direction, EditKind, EditOp, InterpolateMode,
};
use gam_edit::io::{self, load_model, save_model, EditScript, LoadError};
use gam_edit::model::{GamModel, Sample, Value};
use gam_edit::session::{run_script, Session, SessionOptions};
use proptest::prelude::*;
use rand::Rng;

fn bits(m: &GamModel) -> String {
    save_model(m, None)
}

fn scores_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, n)
}

fn weights_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.1..20.0f64], n)
}

fn scores_and_weights() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..24).prop_flat_map(|n| (scores_vec(n), weights_vec(n)))
}

fn is_monotone(v: &[f64], dir: Direction) -> bool {
    v.windows(2).all(|w| match dir {
        Direction::Increasing => w[0] <= w[1],
        Direction::Decreasing => w[0] >= w[1],
    })
}

fn fixed_clock() -> u64 {
    1_700_000_000
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn edits_touch_only_selected_bins(seed in any::<u64>()) {
        let mut r = rng(seed);
        let model = random_model(&mut r, 5, 10, true);
        let op = random_op(&mut r, &model);
        let (edited, diff) = apply_edit(&model, &op).unwrap();
        prop_assert_eq!(edited.intercept().to_bits(), model.intercept().to_bits());
        prop_assert_eq!(edited.interactions(), model.interactions());
        for (a, b) in model.terms().iter().zip(edited.terms()) {
            for i in 0..a.len() {
                let inside = a.name() == op.selection.term && op.selection.contains(i);
                if !inside {
                    prop_assert_eq!(a.scores()[i].to_bits(), b.scores()[i].to_bits(), "{} bin {}", a.name(), i);
                }
            }
            prop_assert_eq!(a.counts(), b.counts());
        }
        prop_assert_eq!(&diff.bins, &op.selection.bins);
        prop_assert!(diff.is_well_formed());
    }

    #[test]
    fn monotonize_directions_are_dual((ys, ws) in scores_and_weights()) {
        let dec = monotonize(&ys, &ws, Direction::Decreasing);
        let neg: Vec<f64> = ys.iter().map(|y| -y).collect();
        let inc: Vec<f64> = monotonize(&neg, &ws, Direction::Increasing).into_iter().map(|v| -v).collect();
        prop_assert_eq!(dec, inc);
    }

    #[test]
    fn monotonize_output_is_monotone_and_preserves_weighted_sum((ys, ws) in scores_and_weights()) {
        for dir in [Direction::Increasing, Direction::Decreasing] {
            let out = monotonize(&ys, &ws, dir);
            prop_assert!(is_monotone(&out, dir), "{:?}", out);
            let w: Vec<f64> = ws.iter().map(|&w| if w == 0.0 { 1e-9 } else { w }).collect();
            let before: f64 = ys.iter().zip(&w).map(|(y, w)| y * w).sum();
            let after: f64 = out.iter().zip(&w).map(|(y, w)| y * w).sum();
            prop_assert!((before - after).abs() <= 1e-9 * (1.0 + before.abs()));
            prop_assert_eq!(monotonize(&out, &ws, dir), out, "not idempotent");
        }
    }

    #[test]
    fn monotonize_leaves_monotone_input_alone((mut ys, ws) in scores_and_weights()) {
        ys.sort_by(f64::total_cmp);
        prop_assert_eq!(monotonize(&ys, &ws, Direction::Increasing), ys.clone());
        ys.reverse();
        prop_assert_eq!(monotonize(&ys, &ws, Direction::Decreasing), ys);
    }

    #[test]
    fn monotonize_is_optimal_for_small_inputs(
        (ys, ws) in (1usize..=7).prop_flat_map(|n| (scores_vec(n), prop::collection::vec(0.1..5.0f64, n)))
    ) {
        let got = monotonize(&ys, &ws, Direction::Increasing);
        let want = brute_force_isotonic(&ys, &ws);
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).abs() <= 1e-9, "{:?} vs {:?}", got, want);
        }
    }

    #[test]
    fn align_is_idempotent((ys, ws) in scores_and_weights(), a in 0usize..3) {
        let anchor = [Anchor::Left, Anchor::Right, Anchor::WeightedMean][a];
        if anchor == Anchor::WeightedMean && ys.iter().any(|&y| y != ys[0]) && ws.iter().all(|&w| w == 0.0) {
            prop_assert!(align(&ys, &ws, anchor).is_err());
            return Ok(());
        }
        let once = align(&ys, &ws, anchor).unwrap();
        prop_assert!(once.windows(2).all(|w| w[0] == w[1]));
        prop_assert_eq!(align(&once, &ws, anchor).unwrap(), once);
    }

    #[test]
    fn delete_and_align_edits_are_idempotent(seed in any::<u64>()) {
        let mut r = rng(seed);
        let model = random_model(&mut r, 4, 10, false);
        let mut op = random_op(&mut r, &model);
        op.kind = if r.gen_bool(0.5) { EditKind::Delete } else { EditKind::Align { anchor: Anchor::Right } };
        let (once, _) = apply_edit(&model, &op).unwrap();
        let (twice, diff) = apply_edit(&once, &op).unwrap();
        prop_assert_eq!(bits(&once), bits(&twice));
        prop_assert!(diff.is_noop());
    }

    #[test]
    fn linear_interpolation_keeps_endpoints(
        (ys, gaps) in (2usize..20).prop_flat_map(|n| (scores_vec(n), prop::collection::vec(0.01..10.0f64, n)))
    ) {
        let mut xs = Vec::with_capacity(ys.len());
        let mut x = -5.0;
        for g in &gaps {
            xs.push(x);
            x += g;
        }
        let out = interpolate(&xs, &ys, &vec![1.0; ys.len()], InterpolateMode::Linear).unwrap();
        prop_assert_eq!(out[0], ys[0]);
        prop_assert_eq!(*out.last().unwrap(), *ys.last().unwrap());
        let (lo, hi) = (ys[0].min(*ys.last().unwrap()), ys[0].max(*ys.last().unwrap()));
        prop_assert!(out.iter().all(|&v| v >= lo - 1e-12 && v <= hi + 1e-12));
    }

    #[test]
    fn raw_score_matches_explicit_sum(seed in any::<u64>()) {
        let mut r = rng(seed);
        let model = random_model(&mut r, 3, 4, true);
        for s in random_samples(&mut r, &model, 20) {
            let bins: Vec<usize> = model
                .terms()
                .iter()
                .zip(&s.values)
                .map(|(t, v)| match v {
                    Value::Number(x) => {
                        let e = t.edges().unwrap();
                        e.iter().rposition(|&edge| edge <= *x).unwrap_or(0)
                    }
                    Value::Label(l) => t.labels().unwrap().iter().position(|x| x == l).unwrap(),
                })
                .collect();
            let mut want = model.intercept();
            for (t, &b) in model.terms().iter().zip(&bins) {
                want += t.scores()[b];
            }
            for it in model.interactions() {
                let a = model.term_index(&it.feature_a).unwrap();
                let b = model.term_index(&it.feature_b).unwrap();
                want += it.scores[bins[a]][bins[b]];
            }
            let got = model.raw_score(&s).unwrap();
            prop_assert!((got - want).abs() <= 1e-12, "{} vs {}", got, want);
        }
    }

    #[test]
    fn distances_are_bounded_and_symmetric(
        (a, b) in (1usize..12).prop_flat_map(|n| (prop::collection::vec(0.0..1.0f64, n), prop::collection::vec(0.0..1.0f64, n)))
    ) {
        let norm = |v: Vec<f64>| {
            let s: f64 = v.iter().sum();
            if s == 0.0 { v } else { v.iter().map(|x| x / s).collect() }
        };
        let (a, b) = (norm(a), norm(b));
        let d = l2_distance(&a, &b);
        prop_assert!((0.0..=2f64.sqrt() + 1e-12).contains(&d));
        prop_assert_eq!(d, l2_distance(&b, &a));
        prop_assert_eq!(l2_distance(&a, &a), 0.0);
    }

    #[test]
    fn ranking_is_deterministic_and_sorted(seed in any::<u64>()) {
        let mut r = rng(seed);
        let model = random_model(&mut r, 6, 8, false);
        let data = random_samples(&mut r, &model, 80);
        let sel = random_op(&mut r, &model).selection;
        let first = correlation::ranking(&model, &data, &sel).unwrap();
        let second = correlation::ranking(&model, &data, &sel).unwrap();
        prop_assert_eq!(&first, &second);
        prop_assert!(first.terms.iter().all(|t| t.term != sel.term));
        for w in first.terms.windows(2) {
            prop_assert!(w[0].distance > w[1].distance || (w[0].distance == w[1].distance && w[0].term < w[1].term));
        }
    }

    #[test]
    fn tampered_history_is_rejected(seed in any::<u64>()) {
        let mut r = rng(seed);
        let model = random_model(&mut r, 4, 8, false);
        let mut s = Session::from_model(model, Vec::new(), SessionOptions::default()).unwrap();
        let mut committed = 0;
        while committed < 3 {
            let op = random_op(&mut r, s.committed());
            if !s.preview(op).unwrap().noop {
                s.resolve_preview(true).unwrap();
                committed += 1;
            } else {
                s.resolve_preview(false).unwrap();
            }
        }
        let saved = save_model(s.committed(), Some(s.history()));
        let mut file: io::ModelFile = serde_json::from_str(&saved).unwrap();
        let mut diff_tampered = file.clone();
        let d = &mut diff_tampered.history.as_mut().unwrap().commits[r.gen_range(0..3)].diff;
        d.old_scores[0] += 0.5;
        let text = serde_json::to_string(&diff_tampered).unwrap();
        prop_assert!(matches!(load_model(text.as_bytes()), Err(LoadError::ReplayMismatch(_))));

        // nudge one score of the head model inside a bin the history touched
        let diff = &file.history.as_ref().unwrap().commits[2].diff;
        let term = file.terms.iter_mut().find(|t| t.name == diff.term).unwrap();
        let b = diff.bins[0];
        term.scores[b] = f64::from_bits(term.scores[b].to_bits() ^ 1);
        let text = serde_json::to_string(&file).unwrap();
        prop_assert!(matches!(load_model(text.as_bytes()), Err(LoadError::ReplayMismatch(_))));
    }

    #[test]
    fn script_replay_is_deterministic(seed in any::<u64>()) {
        let mut r = rng(seed);
        let model = random_model(&mut r, 4, 8, false);
        let data = random_samples(&mut r, &model, 30);
        let mut edits = Vec::new();
        let mut m = model.clone();
        for _ in 0..4 {
            let op = random_op(&mut r, &m);
            let (next, diff) = apply_edit(&m, &op).unwrap();
            if diff.is_noop() {
                continue;
            }
            edits.push(serde_json::json!({"term": op.selection.term, "bins": op.selection.bins, "edit": op.kind}));
            m = next;
        }
        let script = EditScript::parse(serde_json::json!({"edits": edits}).to_string().as_bytes()).unwrap();
        let opts = SessionOptions { clock: fixed_clock, ..Default::default() };
        let run = || {
            let mut s = Session::from_model(model.clone(), data.clone(), opts).unwrap();
            run_script(&mut s, &script).unwrap();
            save_model(s.committed(), Some(s.history()))
        };
        let a = run();
        prop_assert_eq!(&a, &run());
        prop_assert_eq!(load_model(a.as_bytes()).unwrap().model, m);
    }
}

#[test]
fn independent_features_have_zero_distance() {
    use gam_edit::model::{FeatureTerm, Link};
    let t = |n: &str, k: usize| {
        FeatureTerm::continuous(n, (0..k).map(|i| i as f64).collect(), vec![0.0; k], vec![1; k]).unwrap()
    };
    let model = GamModel::new(0.0, Link::Identity, vec![t("a", 3), t("b", 4), t("c", 2)], vec![]).unwrap();
    let mut data = Vec::new();
    for a in 0..3 {
        for b in 0..4 {
            for c in 0..2 {
                data.push(Sample {
                    values: vec![
                        Value::Number(a as f64),
                        Value::Number(b as f64),
                        Value::Number(c as f64),
                    ],
                    label: 0.0,
                });
            }
        }
    }
    let ranking = correlation::ranking(&model, &data, &gam_edit::edit::Selection::new("a", vec![0, 1])).unwrap();
    for t in &ranking.terms {
        assert!(t.distance.abs() <= 1e-12, "{}: {}", t.term, t.distance);
    }
    assert_eq!(ranking.affected_count, 16);
}

#[test]
fn empty_selection_subset_is_flagged() {
    let model = pneumonia_model();
    let data: Vec<Sample> = pneumonia_samples(3)
        .into_iter()
        .filter(|s| s.values[0] != Value::Number(30.0))
        .collect();
    let age = model.term("Age").unwrap();
    let bin = age.bin_of(30.0).unwrap();
    let op = EditOp::new(EditKind::Delete, gam_edit::edit::Selection::new("Age", vec![bin]));
    let ranking = correlation::ranking(&model, &data, &op.selection).unwrap();
    assert_eq!(ranking.affected_count, 0);
    for t in &ranking.terms {
        assert!(t.selected.is_empty());
        assert_eq!(t.distance, 0.0);
    }
}
