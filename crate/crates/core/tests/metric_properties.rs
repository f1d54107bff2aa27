use fairtrans::metrics::{
    aggregate, auc, choose_threshold, consistency_score, hypervolume_2d, ks_statistic, pareto_front, popoviciu_check,
    scale_fairness,
};
use proptest::prelude::*;

fn scored_labels() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..60).prop_flat_map(|n| {
        (
            prop::collection::vec((0u8..12).prop_map(|v| v as f64 / 11.0), n),
            prop::collection::vec(0u8..2, n - 2),
        )
            .prop_map(|(s, mut l)| {
                l.push(0);
                l.push(1);
                (s, l.into_iter().map(f64::from).collect())
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn auc_matches_pairwise_count((scores, labels) in scored_labels()) {
        let (mut wins, mut pairs) = (0.0, 0.0);
        for (si, li) in scores.iter().zip(&labels) {
            for (sj, lj) in scores.iter().zip(&labels) {
                if *li == 1.0 && *lj == 0.0 {
                    pairs += 1.0;
                    wins += if si > sj { 1.0 } else if si == sj { 0.5 } else { 0.0 };
                }
            }
        }
        prop_assert_eq!(auc(&scores, &labels).unwrap(), wins / pairs);
    }

    #[test]
    fn auc_is_invariant_to_increasing_maps((scores, labels) in scored_labels()) {
        let mapped: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() - 7.0).collect();
        prop_assert_eq!(auc(&scores, &labels).unwrap(), auc(&mapped, &labels).unwrap());
        let flipped: Vec<f64> = scores.iter().map(|s| -s).collect();
        let sum = auc(&scores, &labels).unwrap() + auc(&flipped, &labels).unwrap();
        prop_assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn threshold_is_an_observed_score((scores, labels) in scored_labels()) {
        let t = choose_threshold(&scores, &labels).unwrap();
        prop_assert!(scores.contains(&t));
    }

    #[test]
    fn ks_is_a_symmetric_distance(
        a in prop::collection::vec(-3.0f64..3.0, 1..30),
        b in prop::collection::vec(-3.0f64..3.0, 1..30),
    ) {
        let d = ks_statistic(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert_eq!(d, ks_statistic(&b, &a).unwrap());
        prop_assert_eq!(ks_statistic(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn hypervolume_is_monotone_and_front_determined(
        pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..12),
        extra in (0.0f64..1.0, 0.0f64..1.0),
    ) {
        let hv = hypervolume_2d(&pts, (1.0, 1.0)).unwrap();
        prop_assert!((0.0..=1.0).contains(&hv));
        let mut more = pts.clone();
        more.push(extra);
        prop_assert!(hypervolume_2d(&more, (1.0, 1.0)).unwrap() >= hv - 1e-15);
        let front: Vec<(f64, f64)> = pareto_front(&pts).into_iter().map(|i| pts[i]).collect();
        prop_assert!((hypervolume_2d(&front, (1.0, 1.0)).unwrap() - hv).abs() < 1e-15);
        let best = pts.iter().map(|p| (1.0 - p.0) * (1.0 - p.1)).fold(0.0, f64::max);
        prop_assert!(hv >= best - 1e-15);
    }

    #[test]
    fn popoviciu_holds_for_any_values(values in prop::collection::vec(-10.0f64..10.0, 1..20)) {
        let c = popoviciu_check(&values).unwrap();
        prop_assert!(c.holds, "{:?}", c);
    }

    #[test]
    fn aggregate_interval_brackets_the_mean(values in prop::collection::vec(-5.0f64..5.0, 1..20)) {
        let a = aggregate(&values).unwrap();
        prop_assert!(a.lower <= a.mean && a.mean <= a.upper);
        if values.len() > 1 {
            prop_assert!((a.std - consistency_score(&values).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn scaled_fairness_lies_in_unit_interval(values in prop::collection::vec(0.0f64..4.0, 1..20)) {
        let s = scale_fairness(&values);
        prop_assert!(s.iter().all(|v| (0.0..=1.0).contains(v)));
        if values.iter().any(|&v| v > 0.0) {
            prop_assert!(s.contains(&1.0));
        }
    }
}

#[test]
fn sample_variance_can_exceed_the_popoviciu_bound() {
    // Why the check uses the population variance: for [0, 1] the sample
    // variance is 0.5 but range²/4 is 0.25.
    let s = consistency_score(&[0.0, 1.0]).unwrap();
    assert!(s * s > 0.25);
    assert!(popoviciu_check(&[0.0, 1.0]).unwrap().holds);
}

#[test]
fn popoviciu_bound_is_attained_by_two_points() {
    let c = popoviciu_check(&[7.214120201907964, 6.788968230145798]).unwrap();
    assert!(c.holds, "{c:?}");
    assert!((c.variance - c.bound).abs() < 1e-12);
}
