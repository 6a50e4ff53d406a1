//! Seeded random corpora for tests, benchmarks and the bundled demo corpus.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::corpus::{sort_chronologically, ChangedFile, Commit, CommitKind, Hunk, Patch, ReviewComment};
use crate::evaluation::SECONDS_PER_DAY;

const WORDS: [&str; 16] = [
    "alpha", "beta", "gamma", "delta", "value", "count", "index", "buffer", "result", "node", "parse", "write", "read",
    "size", "flag", "x",
];
const DIRS: [&str; 6] = ["", "src", "src/core", "src/io", "include", "tests"];
const STEMS: [&str; 12] = [
    "main", "util", "parser", "writer", "reader", "config", "graph", "cache", "pool", "buffer", "codec", "log",
];
const EXTS: [&str; 3] = ["c", "h", "cpp"];

/// How labels arise in a generated corpus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LabelRule {
    /// Each initial file is commented and revised independently.
    Random { comment_p: f64, revise_p: f64 },
    /// A file is revised iff it adds at least `min_added` lines; no comments.
    FollowsAdded { min_added: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusShape {
    pub patches: usize,
    pub min_files: usize,
    pub max_files: usize,
    pub max_added: usize,
    pub authors: usize,
    pub reviewers: usize,
    pub span_days: i64,
    pub start: i64,
    pub rule: LabelRule,
}

impl Default for CorpusShape {
    fn default() -> Self {
        CorpusShape {
            patches: 30,
            min_files: 1,
            max_files: 5,
            max_added: 12,
            authors: 4,
            reviewers: 5,
            span_days: 730,
            start: 1_500_000_000,
            rule: LabelRule::Random {
                comment_p: 0.2,
                revise_p: 0.25,
            },
        }
    }
}

fn code_line<R: Rng>(rng: &mut R) -> String {
    let n = rng.gen_range(1..=4);
    let mut parts: Vec<String> = (0..n).map(|_| WORDS.choose(rng).unwrap().to_string()).collect();
    if rng.gen_bool(0.3) {
        parts.push(rng.gen_range(0..100).to_string());
    }
    if rng.gen_bool(0.2) {
        parts.push(format!("{}_{}", WORDS.choose(rng).unwrap(), rng.gen_range(0..10)));
    }
    parts.join(" ") + ";"
}

fn lines<R: Rng>(rng: &mut R, n: usize) -> Vec<String> {
    (0..n).map(|_| code_line(rng)).collect()
}

fn random_path<R: Rng>(rng: &mut R) -> String {
    let dir = DIRS.choose(rng).unwrap();
    let name = format!(
        "{}{}.{}",
        STEMS.choose(rng).unwrap(),
        rng.gen_range(0..4),
        EXTS.choose(rng).unwrap()
    );
    if dir.is_empty() {
        name
    } else {
        format!("{dir}/{name}")
    }
}

/// A file whose hunks add `added` lines in total (at least one change per
/// hunk).
fn random_file<R: Rng>(rng: &mut R, path: String, added: usize, max_removed: usize) -> ChangedFile {
    let n_hunks = rng.gen_range(1..=added.clamp(1, 3));
    let mut hunks = Vec::with_capacity(n_hunks);
    let mut left = added;
    for h in 0..n_hunks {
        let take = if h + 1 == n_hunks {
            left
        } else {
            rng.gen_range(0..=left)
        };
        left -= take;
        let mut removed = rng.gen_range(0..=max_removed);
        if take == 0 && removed == 0 {
            removed = 1;
        }
        let (before, after) = (rng.gen_range(0..=3), rng.gen_range(0..=3));
        hunks.push(Hunk {
            added: lines(rng, take),
            removed: lines(rng, removed),
            context_before: lines(rng, before),
            context_after: lines(rng, after),
        });
    }
    ChangedFile { path, hunks }
}

/// Generates a valid corpus in corpus order.
pub fn generate_corpus<R: Rng>(rng: &mut R, shape: &CorpusShape) -> Vec<Patch> {
    let span = shape.span_days.max(1) * SECONDS_PER_DAY;
    let mut times: Vec<i64> = (0..shape.patches)
        .map(|_| shape.start + rng.gen_range(0..span))
        .collect();
    times.sort_unstable();
    let authors: Vec<String> = (0..shape.authors.max(1)).map(|i| format!("dev{i}")).collect();
    let reviewers: Vec<String> = (0..shape.reviewers).map(|i| format!("rev{i}")).collect();
    let mut patches = Vec::with_capacity(shape.patches);
    for (i, &t) in times.iter().enumerate() {
        let patch_id = format!("P{i:04}");
        let author = authors.choose(rng).unwrap().clone();
        let n_rev = rng.gen_range(0..=reviewers.len().min(3));
        let reviewer_ids: BTreeSet<String> = reviewers.choose_multiple(rng, n_rev).cloned().collect();

        let n_files = rng.gen_range(shape.min_files.max(1)..=shape.max_files.max(shape.min_files.max(1)));
        let mut paths: BTreeSet<String> = BTreeSet::new();
        while paths.len() < n_files {
            paths.insert(random_path(rng));
        }
        let mut paths: Vec<String> = paths.into_iter().collect();
        paths.shuffle(rng);

        let initial_id = format!("{patch_id}-c0");
        let files: Vec<ChangedFile> = paths
            .iter()
            .map(|p| {
                let added = rng.gen_range(0..=shape.max_added);
                random_file(rng, p.clone(), added, 3)
            })
            .collect();

        let (revise, comment): (Vec<bool>, Vec<bool>) = match shape.rule {
            LabelRule::Random { comment_p, revise_p } => files
                .iter()
                .map(|_| (rng.gen_bool(revise_p), rng.gen_bool(comment_p)))
                .unzip(),
            LabelRule::FollowsAdded { min_added } => {
                files.iter().map(|f| (f.added_count() >= min_added, false)).unzip()
            }
        };

        let mut commits = vec![Commit {
            commit_id: initial_id.clone(),
            kind: CommitKind::Initial,
            timestamp: t,
            files,
        }];
        let revised_paths: Vec<&String> = paths.iter().zip(&revise).filter(|(_, &r)| r).map(|(p, _)| p).collect();
        let mut ts = t;
        if !revised_paths.is_empty() {
            // spread the revised files over one or two revision commits
            let n_commits = rng.gen_range(1..=revised_paths.len().min(2));
            for c in 0..n_commits {
                ts += rng.gen_range(60..86_400);
                let mut rfiles: Vec<ChangedFile> = revised_paths
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| j % n_commits == c)
                    .map(|(_, p)| {
                        let added = rng.gen_range(1..=4);
                        random_file(rng, (*p).clone(), added, 2)
                    })
                    .collect();
                if rng.gen_bool(0.2) {
                    let extra = random_path(rng);
                    if !paths.contains(&extra) && rfiles.iter().all(|f| f.path != extra) {
                        rfiles.push(random_file(rng, extra, 2, 0));
                    }
                }
                commits.push(Commit {
                    commit_id: format!("{patch_id}-c{}", c + 1),
                    kind: CommitKind::Revision,
                    timestamp: ts,
                    files: rfiles,
                });
            }
        }

        let commenters: Vec<String> = if reviewer_ids.is_empty() {
            vec!["bot".to_string()]
        } else {
            reviewer_ids.iter().cloned().collect()
        };
        let mut comments = Vec::new();
        for (p, &c) in paths.iter().zip(&comment) {
            if !c {
                continue;
            }
            let on = commits.choose(rng).unwrap();
            comments.push(ReviewComment {
                file_path: Some(p.clone()),
                line: rng.gen_bool(0.8).then(|| rng.gen_range(1..200)),
                commit_id: on.commit_id.clone(),
                author_id: commenters.choose(rng).unwrap().clone(),
                timestamp: on.timestamp + rng.gen_range(1..3600),
            });
        }
        if matches!(shape.rule, LabelRule::Random { .. }) && rng.gen_bool(0.3) {
            comments.push(ReviewComment {
                file_path: None,
                line: None,
                commit_id: initial_id.clone(),
                author_id: commenters.choose(rng).unwrap().clone(),
                timestamp: t + 10,
            });
        }

        patches.push(Patch {
            patch_id,
            project: "synthetic".into(),
            author_id: author,
            reviewer_ids,
            submitted_at: t,
            commits,
            comments,
        });
    }
    sort_chronologically(&mut patches);
    patches
}

/// Sizes 2..=14 so that every ordering bucket is populated; hot-spot iff a
/// file adds at least 8 lines.
pub fn hot_spot_follows_added_shape(patches: usize) -> CorpusShape {
    CorpusShape {
        patches,
        min_files: 2,
        max_files: 14,
        max_added: 16,
        span_days: 365,
        rule: LabelRule::FollowsAdded { min_added: 8 },
        ..CorpusShape::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::DEFAULT_CONTEXT_LIMIT;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_corpora_validate() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = generate_corpus(&mut rng, &CorpusShape::default());
            assert_eq!(c.len(), 30);
            for p in &c {
                p.validate(0, DEFAULT_CONTEXT_LIMIT).unwrap();
            }
            assert!(c.windows(2).all(|w| w[0].submitted_at <= w[1].submitted_at));
        }
    }

    #[test]
    fn follows_added_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = generate_corpus(&mut rng, &hot_spot_follows_added_shape(20));
        for p in &c {
            for f in &p.initial_commit().files {
                let revised = p.revisions().any(|r| r.files.iter().any(|g| g.path == f.path));
                assert_eq!(revised, f.added_count() >= 8);
            }
            assert!(p.comments.is_empty());
        }
    }
}
