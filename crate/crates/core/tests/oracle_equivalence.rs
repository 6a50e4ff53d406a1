//! Streaming and rank-based code paths against brute-force references.

mod oracles;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use review_radar::embedding::{fit_vocabulary, preprocess_code};
use review_radar::evaluation::{auc, threshold_f1};
use review_radar::features::{extract_all, is_ratio_feature};
use review_radar::labeling::{label_all, CommentsScope};
use review_radar::stats::{cliffs_delta, wilcoxon_paired};

#[test]
fn labels_equal_join_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..30 {
        let patches = oracles::random_corpus(&mut rng, 30);
        for scope in [CommentsScope::Any, CommentsScope::Initial] {
            let table = label_all(&patches, scope);
            let expected = oracles::labels(&patches, scope);
            assert_eq!(table.len(), expected.len());
            for (key, c, r, h) in expected {
                let got = table.get(&key).unwrap();
                assert_eq!((got.commented, got.revised, got.hot_spot), (c, r, h), "{key:?}");
            }
        }
    }
}

#[test]
fn features_equal_rescan_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..10 {
        let patches = oracles::random_corpus(&mut rng, 80);
        let labels = label_all(&patches, CommentsScope::Any);
        let m = extract_all(&patches, &labels);
        let expected = oracles::features(&patches);
        assert_eq!(m.len(), expected.len());
        for (key, want) in expected {
            let got = &m[&key].values;
            for (i, (g, w)) in got.iter().zip(&want).enumerate() {
                if is_ratio_feature(i) {
                    assert!((g - w).abs() < 1e-12, "{key:?} feature {i}: {g} vs {w}");
                } else {
                    assert_eq!(g, w, "{key:?} feature {i}");
                }
            }
        }
    }
}

#[test]
fn no_look_ahead() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let patches = oracles::random_corpus(&mut rng, 40);
    let full = extract_all(&patches, &label_all(&patches, CommentsScope::Any));
    let cut = patches.len() / 2;
    let prefix = &patches[..cut];
    let part = extract_all(prefix, &label_all(prefix, CommentsScope::Any));
    for (k, v) in &part {
        assert_eq!(&full[k], v);
    }
}

#[test]
fn vocabulary_document_frequency_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..50 {
        let patches = oracles::random_corpus(&mut rng, 20);
        let docs: Vec<Vec<String>> = patches
            .iter()
            .flat_map(|p| p.commits[0].files.iter())
            .map(|f| preprocess_code(f.added_lines()))
            .collect();
        let vocab = fit_vocabulary(&docs);
        let all_tokens: std::collections::BTreeSet<&String> = docs.iter().flatten().collect();
        for t in all_tokens {
            let df = oracles::document_frequency(&docs, t);
            let kept = vocab.column(t).is_some();
            assert_eq!(kept, df >= 2 && df <= docs.len() / 2, "{t} df={df} n={}", docs.len());
        }
    }
}

fn random_scores(rng: &mut ChaCha8Rng, n: usize) -> (Vec<f64>, Vec<bool>) {
    let levels = rng.gen_range(1..=n.max(2));
    let scores = (0..n)
        .map(|_| rng.gen_range(0..levels) as f64 / levels as f64)
        .collect();
    let p = rng.gen_range(0.1..0.9);
    let mut labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(p)).collect();
    labels[0] = true;
    labels[1] = false;
    (scores, labels)
}

#[test]
fn auc_equals_pair_counting() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..300 {
        let n = rng.gen_range(2..=120);
        let (s, l) = random_scores(&mut rng, n);
        assert!((auc(&s, &l).unwrap() - oracles::auc(&s, &l)).abs() < 1e-12);
    }
}

#[test]
fn threshold_beats_every_observed_score() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..300 {
        let n = rng.gen_range(2..=60);
        let (s, l) = random_scores(&mut rng, n);
        let choice = threshold_f1(&s, &l);
        let at_choice = oracles::f1_at(&s, &l, choice.threshold);
        assert!((choice.f1 - at_choice).abs() < 1e-12);
        for &t in &s {
            assert!(oracles::f1_at(&s, &l, t) <= choice.f1 + 1e-12);
        }
    }
}

#[test]
fn wilcoxon_equals_sign_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..200 {
        let n = rng.gen_range(1..=12);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0..6) as f64 / 4.0).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0..6) as f64 / 4.0).collect();
        let got = wilcoxon_paired(&x, &y).p_value;
        assert!((got - oracles::wilcoxon_p(&x, &y)).abs() < 1e-12, "{x:?} {y:?}");
    }
}

#[test]
fn cliffs_delta_equals_pair_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    for _ in 0..300 {
        let x: Vec<f64> = (0..rng.gen_range(1..30)).map(|_| rng.gen_range(0..10) as f64).collect();
        let y: Vec<f64> = (0..rng.gen_range(1..30)).map(|_| rng.gen_range(0..10) as f64).collect();
        let (d, _) = cliffs_delta(&x, &y);
        assert!((d - oracles::cliffs_delta(&x, &y)).abs() < 1e-12);
        assert!((d + cliffs_delta(&y, &x).0).abs() < 1e-12);
    }
}
