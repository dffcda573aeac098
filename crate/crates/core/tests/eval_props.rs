use std::collections::BTreeSet;

use proptest::prelude::*;

use lexcorpus::eval::{build_report, curve_auc, f1_scores, Averaging, LearningCurve, PredictionRecord};

fn curve_points(max: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    (0.0f64..5.0, prop::collection::vec((0.01f64..3.0, 0.0f64..=1.0), 2..=max)).prop_map(
        |(start, steps)| {
            let mut epoch = start;
            steps
                .into_iter()
                .enumerate()
                .map(|(i, (gap, f1))| {
                    if i > 0 {
                        epoch += gap;
                    }
                    (epoch, f1)
                })
                .collect()
        },
    )
}

fn curve(points: Vec<(f64, f64)>) -> LearningCurve {
    LearningCurve::new("m", points).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

fn labels() -> impl Strategy<Value = BTreeSet<String>> {
    prop::collection::btree_set(prop::sample::select(vec!["a", "b", "c", "d"]).prop_map(str::to_string), 0..4)
}

proptest! {
    #[test]
    fn auc_scales_with_f1(p in curve_points(10), c in 0.0f64..=1.0) {
        let scaled: Vec<_> = p.iter().map(|&(e, f)| (e, f * c)).collect();
        prop_assert!(close(curve_auc(&curve(scaled)).unwrap(), c * curve_auc(&curve(p)).unwrap()));
    }

    #[test]
    fn auc_ignores_epoch_shift(p in curve_points(10), shift in 0.0f64..10.0) {
        let shifted: Vec<_> = p.iter().map(|&(e, f)| (e + shift, f)).collect();
        prop_assert!(close(curve_auc(&curve(shifted)).unwrap(), curve_auc(&curve(p)).unwrap()));
    }

    #[test]
    fn auc_is_additive_over_a_split(p in curve_points(10), at in any::<prop::sample::Index>()) {
        prop_assume!(p.len() >= 3);
        let k = 1 + at.index(p.len() - 2);
        let left = curve(p[..=k].to_vec());
        let right = curve(p[k..].to_vec());
        let whole = curve_auc(&curve(p)).unwrap();
        prop_assert!(close(curve_auc(&left).unwrap() + curve_auc(&right).unwrap(), whole));
    }

    #[test]
    fn dominating_curve_has_no_smaller_auc(p in curve_points(10), lift in prop::collection::vec(0.0f64..=1.0, 10)) {
        let higher: Vec<_> = p.iter().zip(&lift).map(|(&(e, f), &l)| (e, f + (1.0 - f) * l)).collect();
        prop_assert!(curve_auc(&curve(higher)).unwrap() >= curve_auc(&curve(p)).unwrap());
    }

    #[test]
    fn report_flags_the_column_maxima(curves in prop::collection::vec(curve_points(6), 1..6)) {
        let curves: Vec<_> = curves
            .into_iter()
            .enumerate()
            .map(|(i, p)| LearningCurve::new(format!("m{i}"), p).unwrap())
            .collect();
        let report = build_report(&curves, "d").unwrap();
        let best_f1 = report.rows.iter().map(|r| r.max_f1).fold(f64::MIN, f64::max);
        let best_auc = report.rows.iter().map(|r| r.auc).fold(f64::MIN, f64::max);
        for r in &report.rows {
            prop_assert_eq!(r.best_max_f1, r.max_f1 == best_f1);
            prop_assert_eq!(r.best_auc, r.auc == best_auc);
        }
    }

    #[test]
    fn f1_stays_in_unit_interval(recs in prop::collection::vec((labels(), labels()), 1..30)) {
        let preds: Vec<_> = recs
            .into_iter()
            .enumerate()
            .map(|(i, (gold, predicted))| PredictionRecord { example_id: i.to_string(), gold, predicted })
            .collect();
        for avg in [Averaging::Micro, Averaging::Macro] {
            let f = f1_scores(&preds, None, avg).unwrap();
            prop_assert!((0.0..=1.0).contains(&f));
        }
    }

    #[test]
    fn perfect_predictions_score_one(golds in prop::collection::vec(labels(), 1..30)) {
        prop_assume!(golds.iter().any(|g| !g.is_empty()));
        let preds: Vec<_> = golds
            .into_iter()
            .enumerate()
            .map(|(i, g)| PredictionRecord { example_id: i.to_string(), gold: g.clone(), predicted: g })
            .collect();
        prop_assert_eq!(f1_scores(&preds, None, Averaging::Micro).unwrap(), 1.0);
        prop_assert_eq!(f1_scores(&preds, None, Averaging::Macro).unwrap(), 1.0);
    }
}
