//! Brute-force reference implementations used to check the streaming and
//! rank-based code paths. Deliberately naive: every value is recomputed from
//! scratch.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use review_radar::corpus::{directory_of, CommitKind, Patch};
use review_radar::features::FEATURE_COUNT;
use review_radar::labeling::{CommentsScope, FileKey};
use review_radar::synthetic::{generate_corpus, CorpusShape, LabelRule};

/// A random corpus of up to `max_patches` patches with a random shape.
pub fn random_corpus<R: Rng>(rng: &mut R, max_patches: usize) -> Vec<Patch> {
    let n = rng.gen_range(1..=max_patches);
    corpus_of_size(rng, n)
}

/// A random corpus of exactly `patches` patches with a random shape.
pub fn corpus_of_size<R: Rng>(rng: &mut R, patches: usize) -> Vec<Patch> {
    let shape = CorpusShape {
        patches,
        min_files: 1,
        max_files: rng.gen_range(1..=6),
        max_added: rng.gen_range(1..=10),
        authors: rng.gen_range(1..=4),
        reviewers: rng.gen_range(1..=5),
        span_days: rng.gen_range(1..=900),
        rule: LabelRule::Random {
            comment_p: rng.gen_range(0.0..0.6),
            revise_p: rng.gen_range(0.0..0.6),
        },
        ..CorpusShape::default()
    };
    generate_corpus(rng, &shape)
}

/// `(key, commented, revised, hot_spot)` for every initial-commit file, by
/// joining every comment and every revision file against every file.
pub fn labels(patches: &[Patch], scope: CommentsScope) -> Vec<(FileKey, bool, bool, bool)> {
    let mut out = Vec::new();
    for p in patches {
        let initial = &p.commits[0];
        for f in &initial.files {
            let mut commented = false;
            for c in &p.comments {
                let scoped = match scope {
                    CommentsScope::Any => true,
                    CommentsScope::Initial => c.commit_id == initial.commit_id,
                };
                if scoped && c.file_path.as_deref() == Some(f.path.as_str()) {
                    commented = true;
                }
            }
            let mut revised = false;
            for c in &p.commits {
                if c.kind != CommitKind::Revision {
                    continue;
                }
                for g in &c.files {
                    if g.path == f.path {
                        revised = true;
                    }
                }
            }
            out.push((
                FileKey::new(&p.patch_id, &f.path),
                commented,
                revised,
                commented || revised,
            ));
        }
    }
    out
}

type LabelIndex = HashMap<FileKey, [f64; 3]>;

/// Per-label fraction of `p`'s initial files satisfying `keep` that carry
/// the label, or `None` when no file is kept.
fn fraction(all: &LabelIndex, p: &Patch, keep: impl Fn(&str) -> bool) -> Option<[f64; 3]> {
    let mut sums = [0.0; 3];
    let mut n = 0.0;
    for f in &p.commits[0].files {
        if keep(&f.path) {
            n += 1.0;
            let l = all[&FileKey::new(&p.patch_id, &f.path)];
            for i in 0..3 {
                sums[i] += l[i];
            }
        }
    }
    (n > 0.0).then(|| sums.map(|s| s / n))
}

/// `(experience, mean fractions)` over the earlier patches yielding a value.
fn scan(fracs: impl Iterator<Item = Option<[f64; 3]>>) -> (f64, [f64; 3]) {
    let mut count = 0.0;
    let mut sums = [0.0; 3];
    for f in fracs.flatten() {
        count += 1.0;
        for i in 0..3 {
            sums[i] += f[i];
        }
    }
    let avg = if count == 0.0 {
        [0.0; 3]
    } else {
        sums.map(|s| s / count)
    };
    (count + 1.0, avg)
}

fn unchanged(f: &review_radar::corpus::ChangedFile) -> usize {
    f.hunks
        .iter()
        .map(|h| h.context_before.len() + h.context_after.len())
        .sum()
}

fn div(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

/// All 37 features of every initial-commit file, re-scanning every earlier
/// patch from scratch for each row.
pub fn features(patches: &[Patch]) -> Vec<(FileKey, Vec<f64>)> {
    let all: LabelIndex = labels(patches, CommentsScope::Any)
        .into_iter()
        .map(|(k, c, r, h)| (k, [c, r, h].map(|b| if b { 1.0 } else { 0.0 })))
        .collect();
    let mut out = Vec::new();
    for (i, p) in patches.iter().enumerate() {
        let earlier = &patches[..i];
        let files = &p.commits[0].files;
        for f in files {
            let mut v = Vec::with_capacity(FEATURE_COUNT);
            let add: usize = f.hunks.iter().map(|h| h.added.len()).sum();
            let rem: usize = f.hunks.iter().map(|h| h.removed.len()).sum();
            let unc = unchanged(f);
            let add_t: usize = files.iter().flat_map(|g| &g.hunks).map(|h| h.added.len()).sum();
            let rem_t: usize = files.iter().flat_map(|g| &g.hunks).map(|h| h.removed.len()).sum();
            let unc_t: usize = files.iter().map(unchanged).sum();
            v.extend([add, rem, unc, add_t, rem_t, unc_t].map(|x| x as f64));
            v.push(div(add as f64, add_t as f64));
            v.push(div(rem as f64, rem_t as f64));
            v.push(div(unc as f64, unc_t as f64));

            let dir = directory_of(&f.path);
            let author = &p.author_id;
            let (file_exp, file_r) = scan(earlier.iter().map(|q| fraction(&all, q, |x| x == f.path)));
            let (dir_exp, dir_r) = scan(earlier.iter().map(|q| fraction(&all, q, |x| directory_of(x) == dir)));
            let by_author = || earlier.iter().filter(|q| &q.author_id == author);
            let (auth_exp, auth_r) = scan(by_author().map(|q| fraction(&all, q, |_| true)));
            let (af_exp, af_r) = scan(by_author().map(|q| fraction(&all, q, |x| x == f.path)));
            let (ad_exp, ad_r) = scan(by_author().map(|q| fraction(&all, q, |x| directory_of(x) == dir)));

            v.extend([file_exp, dir_exp]);
            v.extend(file_r);
            v.extend(dir_r);
            v.extend([auth_exp, af_exp, ad_exp]);
            v.extend(auth_r);
            v.extend(af_r);
            v.extend(ad_r);

            let reviewers: Vec<(f64, [f64; 3])> = p
                .reviewer_ids
                .iter()
                .map(|r| {
                    scan(
                        earlier
                            .iter()
                            .filter(|q| q.reviewer_ids.contains(r))
                            .map(|q| fraction(&all, q, |_| true)),
                    )
                })
                .collect();
            if reviewers.is_empty() {
                v.extend([1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
            } else {
                let n = reviewers.len() as f64;
                v.push(reviewers.iter().map(|r| r.0).fold(f64::MIN, f64::max));
                v.push(reviewers.iter().map(|r| r.0).sum::<f64>() / n);
                for l in 0..3 {
                    v.push(reviewers.iter().map(|r| r.1[l]).fold(0.0, f64::max));
                }
                for l in 0..3 {
                    v.push(reviewers.iter().map(|r| r.1[l]).sum::<f64>() / n);
                }
            }
            out.push((FileKey::new(&p.patch_id, &f.path), v));
        }
    }
    out
}

/// Document frequencies of every token over `docs`.
pub fn document_frequency(docs: &[Vec<String>], token: &str) -> usize {
    docs.iter().filter(|d| d.iter().any(|t| t == token)).count()
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half.
pub fn auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if labels[i] && !labels[j] {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

pub fn f1_at(scores: &[f64], labels: &[bool], t: f64) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
    for (&s, &y) in scores.iter().zip(labels) {
        match (s >= t, y) {
            (true, true) => tp += 1.0,
            (true, false) => fp += 1.0,
            (false, true) => fn_ += 1.0,
            _ => {}
        }
    }
    if tp == 0.0 {
        0.0
    } else {
        2.0 * tp / (2.0 * tp + fp + fn_)
    }
}

fn average_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&x| {
            let below = v.iter().filter(|&&y| y < x).count() as f64;
            let equal = v.iter().filter(|&&y| y == x).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Exact two-sided signed-rank p-value by enumerating every sign pattern.
pub fn wilcoxon_p(x: &[f64], y: &[f64]) -> f64 {
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|v| *v != 0.0).collect();
    if d.is_empty() {
        return 1.0;
    }
    let ranks = average_ranks(&d.iter().map(|v| v.abs()).collect::<Vec<_>>());
    let observed: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let n = d.len();
    let (mut lo, mut hi) = (0u64, 0u64);
    for mask in 0u64..(1 << n) {
        let w: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if w <= observed + 1e-9 {
            lo += 1;
        }
        if w >= observed - 1e-9 {
            hi += 1;
        }
    }
    let total = (1u64 << n) as f64;
    (2.0 * lo.min(hi) as f64 / total).min(1.0)
}

pub fn cliffs_delta(x: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for a in x {
        for b in y {
            if a > b {
                s += 1.0;
            } else if a < b {
                s -= 1.0;
            }
        }
    }
    s / (x.len() * y.len()) as f64
}

/// Hot-spots among the first `ceil(f * n)` files over `min(hot, k)`.
pub fn recall_at(ordered: &[String], hot: &BTreeSet<String>, f: f64) -> f64 {
    let k = (f * ordered.len() as f64).ceil() as usize;
    let found = ordered[..k].iter().filter(|p| hot.contains(*p)).count();
    found as f64 / hot.len().min(k) as f64
}
