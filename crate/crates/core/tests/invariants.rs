use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use oncoprog::diffexpr::{bh_adjust, pooled_t_test};
use oncoprog::enrichment::hypergeometric_sf;
use oncoprog::models::svm::{encode_row, primal_objective};
use oncoprog::models::{
    auc, stratified_kfold, BayesParams, Confusion, Dataset, FeatureSpec, ForestParams, LinearSvm,
    NaiveBayes, RandomForest, SvmParams,
};
use oncoprog::survival::{km_estimate, SurvivalObservation};
use oncoprog::Label;

fn label(positive: bool) -> Label {
    if positive {
        Label::HighRisk
    } else {
        Label::LowRisk
    }
}

fn observations() -> impl Strategy<Value = Vec<(u32, bool)>> {
    prop::collection::vec((1u32..30, any::<bool>()), 1..25)
}

/// Mixed numeric/categorical dataset with both classes present.
fn dataset() -> impl Strategy<Value = Dataset> {
    (4usize..40, any::<u64>()).prop_map(|(n, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = (0..n)
            .map(|_| vec![rng.gen_range(-3.0..3.0), rng.gen_range(0..3) as f64])
            .collect();
        let mut labels: Vec<Label> = (0..n).map(|_| label(rng.gen_bool(0.5))).collect();
        labels[0] = Label::HighRisk;
        labels[1] = Label::LowRisk;
        Dataset::new(
            "prop",
            vec![
                FeatureSpec::numeric("x"),
                FeatureSpec::categorical("c", &["a", "b", "c"]),
            ],
            rows,
            labels,
        )
        .unwrap()
    })
}

proptest! {
    #[test]
    fn km_is_monotone_and_bounded(obs in observations()) {
        let input: Vec<_> = obs.iter().map(|&(t, e)| SurvivalObservation::new(t as f64, e, "g")).collect();
        let curve = km_estimate(&input).unwrap();
        let mut prev = 1.0;
        for (i, &s) in curve.survival.iter().enumerate() {
            prop_assert!((0.0..=1.0).contains(&s));
            prop_assert!(s <= prev);
            prop_assert!(curve.lower_95[i] <= s + 1e-12 && s <= curve.upper_95[i] + 1e-12);
            prev = s;
        }
    }

    #[test]
    fn km_is_scale_equivariant(obs in observations(), scale in 0.01f64..100.0) {
        let base: Vec<_> = obs.iter().map(|&(t, e)| SurvivalObservation::new(t as f64, e, "g")).collect();
        let scaled: Vec<_> = obs.iter().map(|&(t, e)| SurvivalObservation::new(t as f64 * scale, e, "g")).collect();
        let a = km_estimate(&base).unwrap();
        let b = km_estimate(&scaled).unwrap();
        prop_assert_eq!(&a.survival, &b.survival);
        prop_assert_eq!(&a.greenwood_se, &b.greenwood_se);
        let expected: Vec<f64> = a.event_times.iter().map(|t| t * scale).collect();
        prop_assert_eq!(expected, b.event_times);
    }

    #[test]
    fn bh_is_monotone_and_dominates_p(p in prop::collection::vec(0.0f64..=1.0, 1..30)) {
        let q = bh_adjust(&p).unwrap();
        for i in 0..p.len() {
            // p * m / m may round one ulp below p
            prop_assert!(q[i] >= p[i] * (1.0 - 4.0 * f64::EPSILON) && q[i] <= 1.0);
            for j in 0..p.len() {
                if p[i] <= p[j] {
                    prop_assert!(q[i] <= q[j]);
                }
            }
        }
    }

    #[test]
    fn t_is_antisymmetric(
        a in prop::collection::vec(-50.0f64..50.0, 2..15),
        b in prop::collection::vec(-50.0f64..50.0, 2..15),
    ) {
        let (t_ab, p_ab, _) = pooled_t_test(&a, &b);
        let (t_ba, p_ba, _) = pooled_t_test(&b, &a);
        prop_assert_eq!(t_ab, -t_ba);
        prop_assert_eq!(p_ab, p_ba);
    }

    #[test]
    fn t_is_location_invariant(
        a in prop::collection::vec(-50.0f64..50.0, 2..15),
        b in prop::collection::vec(-50.0f64..50.0, 2..15),
        shift in -100.0f64..100.0,
    ) {
        let (t, p, degenerate) = pooled_t_test(&a, &b);
        prop_assume!(!degenerate);
        let a2: Vec<f64> = a.iter().map(|x| x + shift).collect();
        let b2: Vec<f64> = b.iter().map(|x| x + shift).collect();
        let (t2, p2, _) = pooled_t_test(&a2, &b2);
        prop_assert!((t - t2).abs() <= 1e-6 * t.abs().max(1.0), "{} vs {}", t, t2);
        prop_assert!((p - p2).abs() <= 1e-6);
    }

    #[test]
    fn hypergeometric_symmetric_in_successes_and_draws(n in 1u64..200, a in 0u64..200, b in 0u64..200, k in 0u64..200) {
        let (s, d) = (a % (n + 1), b % (n + 1));
        let x = hypergeometric_sf(k, n, s, d);
        let y = hypergeometric_sf(k, n, d, s);
        prop_assert!((x - y).abs() <= 1e-12, "{} vs {}", x, y);
    }

    #[test]
    fn hypergeometric_decreases_in_k(n in 1u64..200, a in 0u64..200, b in 0u64..200) {
        let (s, d) = (a % (n + 1), b % (n + 1));
        let mut prev = 1.0;
        for k in 0..=s.min(d) + 1 {
            let p = hypergeometric_sf(k, n, s, d);
            prop_assert!((0.0..=1.0).contains(&p));
            prop_assert!(p <= prev + 1e-12);
            prev = p;
        }
    }

    #[test]
    fn label_swap_mirrors_metrics(pairs in prop::collection::vec((any::<bool>(), 0u32..=64), 2..60)) {
        prop_assume!(pairs.iter().any(|p| p.0) && pairs.iter().any(|p| !p.0));
        prop_assume!(pairs.iter().all(|p| p.1 != 32));
        let labels: Vec<Label> = pairs.iter().map(|p| label(p.0)).collect();
        let swapped: Vec<Label> = pairs.iter().map(|p| label(!p.0)).collect();
        let scores: Vec<f64> = pairs.iter().map(|p| p.1 as f64 / 64.0).collect();
        let mirrored: Vec<f64> = scores.iter().map(|s| 1.0 - s).collect();

        let c = Confusion::from_scores(&labels, &scores);
        let m = Confusion::from_scores(&swapped, &mirrored);
        prop_assert_eq!(c.sensitivity(), m.specificity());
        prop_assert_eq!(c.specificity(), m.sensitivity());
        prop_assert!((auc(&labels, &scores) + auc(&swapped, &scores) - 1.0).abs() <= 1e-12);
        prop_assert_eq!(auc(&labels, &scores), auc(&swapped, &mirrored));
    }

    #[test]
    fn svm_objective_not_worse_than_zero_vector(data in dataset(), seed in any::<u64>()) {
        let params = SvmParams { epochs: 10, ..SvmParams::default() };
        let svm = LinearSvm::fit(&data, params, seed);
        let encoded: Vec<Vec<f64>> = data.rows.iter().map(|r| encode_row(&svm.encoding, r)).collect();
        let y: Vec<f64> = data.labels.iter().map(|l| if l.is_positive() { 1.0 } else { -1.0 }).collect();
        let recomputed = primal_objective(&svm.augmented(), &encoded, &y, svm.lambda);
        prop_assert!(svm.objective <= 1.0);
        prop_assert!((recomputed - svm.objective).abs() <= 1e-9);
    }

    #[test]
    fn folds_partition_and_balance(positives in 2usize..30, negatives in 2usize..30, k in 2usize..6, seed in any::<u64>()) {
        prop_assume!(positives >= k && negatives >= k);
        let n = positives + negatives;
        let labels: Vec<Label> = (0..n).map(|i| label(i < positives)).collect();
        let data = Dataset::new("folds", vec![FeatureSpec::numeric("x")], (0..n).map(|i| vec![i as f64]).collect(), labels).unwrap();
        let folds = stratified_kfold(&data, k, seed).unwrap();
        prop_assert_eq!(folds.len(), n);
        for class in [true, false] {
            let mut sizes = vec![0usize; k];
            for (i, &f) in folds.iter().enumerate() {
                prop_assert!(f < k);
                if data.labels[i].is_positive() == class {
                    sizes[f] += 1;
                }
            }
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
        prop_assert_eq!(folds, stratified_kfold(&data, k, seed).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn forest_is_deterministic(data in dataset(), seed in any::<u64>()) {
        let params = ForestParams { n_trees: 20, ..ForestParams::default() };
        let a = RandomForest::fit(&data, params, seed);
        let b = RandomForest::fit(&data, params, seed);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn naive_bayes_matches_bayes_rule_on_separated_clusters(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..100 {
            let positive = i % 2 == 0;
            let centre = if positive { 5.0 } else { -5.0 };
            rows.push(vec![centre + noise.sample(&mut rng)]);
            labels.push(label(positive));
        }
        let data = Dataset::new("clusters", vec![FeatureSpec::numeric("x")], rows, labels).unwrap();
        let model = NaiveBayes::fit(&data, BayesParams::default());
        // equal priors and variances: the Bayes rule is the sign of x
        let agree = data.rows.iter().filter(|r| (model.score(r) >= 0.5) == (r[0] > 0.0)).count();
        let correct = data.rows.iter().zip(&data.labels).filter(|(r, l)| (model.score(r) >= 0.5) == l.is_positive()).count();
        prop_assert!(agree >= 99, "agreement {}", agree);
        prop_assert!(correct >= 99, "accuracy {}", correct);
    }
}
