//! Invariants checked over generated inputs.

mod oracles;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use review_radar::evaluation::{auc, split_ratio, split_sliding, RowTable, Split};
use review_radar::learning::{smote, train, Hyperparameters, Variant};
use review_radar::matrix::DenseMatrix;
use review_radar::ordering::{order_files, recall_at, OrderItem, Policy};

fn check_split(rows: &RowTable, s: &Split) {
    let max_train = s.train.iter().map(|&i| rows.times[i]).max().unwrap();
    for &i in s.validation.iter().chain(&s.test) {
        assert!(rows.times[i] >= max_train, "{} precedes train", rows.times[i]);
    }
    let max_val = s.validation.iter().map(|&i| rows.times[i]).max().unwrap();
    for &i in &s.test {
        assert!(rows.times[i] >= max_val);
    }
    let part_of = |i: usize| {
        if s.train.contains(&i) {
            0
        } else if s.validation.contains(&i) {
            1
        } else if s.test.contains(&i) {
            2
        } else {
            3
        }
    };
    let mut seen = std::collections::HashMap::new();
    for i in s.train.iter().chain(&s.validation).chain(&s.test) {
        let part = part_of(*i);
        let prev = seen.insert(rows.patch[*i], part);
        assert!(
            prev.is_none() || prev == Some(part),
            "patch {} straddles",
            rows.patch[*i]
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn splits_are_temporal_and_patch_atomic(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let patches = oracles::random_corpus(&mut rng, 60);
        let rows = RowTable::from_corpus(&patches);
        if let Ok(s) = split_ratio(&rows) {
            check_split(&rows, &s);
            prop_assert_eq!(s.train.len() + s.validation.len() + s.test.len(), rows.len());
        }
        if let Ok(splits) = split_sliding(&rows, 90) {
            for s in &splits {
                check_split(&rows, s);
            }
        }
    }

    #[test]
    fn smote_points_lie_between_parents(
        rows in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 3), 2..20),
        count in 1usize..40,
        k in 1usize..8,
        seed in any::<u64>(),
    ) {
        let s = smote(&rows, k, count, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(s.parents.len(), count);
        for (i, &(a, b)) in s.parents.iter().enumerate() {
            for (c, v) in s.rows.row(i).iter().enumerate() {
                let (lo, hi) = (rows[a][c].min(rows[b][c]), rows[a][c].max(rows[b][c]));
                prop_assert!(*v >= lo - 1e-9 && *v <= hi + 1e-9);
            }
        }
    }

    #[test]
    fn smote_training_balances_classes(n_pos in 2usize..15, n_neg in 16usize..40, seed in any::<u64>()) {
        let mut data = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n_pos + n_neg {
            data.push(vec![i as f64, (i % 3) as f64]);
            labels.push(i < n_pos);
        }
        let m = DenseMatrix::from_rows(&data);
        let hp = Hyperparameters { n_trees: 3, ..Hyperparameters::default() };
        let a = train(Variant::Nbs, &m, &labels, seed, &hp, vec!["a".into(), "b".into()]).unwrap();
        prop_assert_eq!(a.synthetic_rows, n_neg - n_pos);
        prop_assert_eq!(a.training_rows, 2 * n_neg);
    }

    #[test]
    fn oracle_recall_is_perfect(hot in prop::collection::vec(any::<bool>(), 2..20)) {
        prop_assume!(hot.iter().any(|h| *h));
        let items: Vec<OrderItem> = hot
            .iter()
            .enumerate()
            .map(|(i, &h)| OrderItem { path: format!("f{i:02}"), score: None, hot_spot: h })
            .collect();
        let ordered = order_files(&items, Policy::Oracle, 0).unwrap();
        let hs: Vec<&str> = items.iter().filter(|i| i.hot_spot).map(|i| i.path.as_str()).collect();
        prop_assert_eq!(recall_at(&ordered, &hs, 0.5).unwrap(), 1.0);
        prop_assert_eq!(recall_at(&ordered, &hs, 0.25).unwrap(), 1.0);
    }

    #[test]
    fn raising_a_hot_spot_never_lowers_recall(
        scores in prop::collection::vec(0.0f64..1.0, 2..15),
        hot_idx in 0usize..15,
        bump in 0.0f64..1.0,
    ) {
        let hot_idx = hot_idx % scores.len();
        let mk = |s: &[f64]| -> Vec<OrderItem> {
            s.iter()
                .enumerate()
                .map(|(i, &v)| OrderItem { path: format!("f{i:02}"), score: Some(v), hot_spot: i == hot_idx })
                .collect()
        };
        let hs = [format!("f{hot_idx:02}")];
        let hs: Vec<&str> = hs.iter().map(String::as_str).collect();
        let before = recall_at(&order_files(&mk(&scores), Policy::Predicted, 0).unwrap(), &hs, 0.5).unwrap();
        let mut raised = scores.clone();
        raised[hot_idx] += bump;
        let after = recall_at(&order_files(&mk(&raised), Policy::Predicted, 0).unwrap(), &hs, 0.5).unwrap();
        prop_assert!(after >= before);
    }

    #[test]
    fn recall_matches_reference(hot in prop::collection::vec(any::<bool>(), 2..20), seed in any::<u64>()) {
        prop_assume!(hot.iter().any(|h| *h));
        let items: Vec<OrderItem> = hot
            .iter()
            .enumerate()
            .map(|(i, &h)| OrderItem { path: format!("f{i:02}"), score: None, hot_spot: h })
            .collect();
        let ordered = order_files(&items, Policy::Random, seed).unwrap();
        let set: BTreeSet<String> = items.iter().filter(|i| i.hot_spot).map(|i| i.path.clone()).collect();
        let hs: Vec<&str> = set.iter().map(String::as_str).collect();
        for f in [0.5, 0.25] {
            prop_assert!((recall_at(&ordered, &hs, f).unwrap() - oracles::recall_at(&ordered, &set, f)).abs() < 1e-15);
        }
    }
}

#[test]
fn random_policy_matches_hypergeometric_expectation() {
    // 10 files, 3 hot-spots, k = 5: E[found] = 5 * 3 / 10, denominator 3.
    let items: Vec<OrderItem> = (0..10)
        .map(|i| OrderItem {
            path: format!("f{i}"),
            score: None,
            hot_spot: i < 3,
        })
        .collect();
    let hs = ["f0", "f1", "f2"];
    let draws = 100_000u64;
    let mean: f64 = (0..draws)
        .map(|s| recall_at(&order_files(&items, Policy::Random, s).unwrap(), &hs, 0.5).unwrap())
        .sum::<f64>()
        / draws as f64;
    assert!((mean - 0.5).abs() < 0.02, "{mean}");
}

#[test]
fn auc_edge_cases() {
    assert_eq!(auc(&[0.9, 0.8, 0.1, 0.2], &[true, true, false, false]).unwrap(), 1.0);
    assert_eq!(auc(&[0.3; 6], &[true, false, true, false, true, false]).unwrap(), 0.5);
    assert!(auc(&[0.1, 0.2], &[true, true]).is_err());
}

#[test]
fn maxed_at_k_example() {
    let ordered: Vec<String> = ["a", "b", "c", "d"].map(String::from).to_vec();
    assert_eq!(recall_at(&ordered, &["a", "b", "c"], 0.5).unwrap(), 1.0);
    assert_eq!(recall_at(&ordered, &["c", "d"], 0.5).unwrap(), 0.0);
}
