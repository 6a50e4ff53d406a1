//! Review-process features for every initial-commit file.
//!
//! Size features (1-9) depend only on the current patch. History features
//! (10-37) come from accumulators over strictly earlier patches in corpus
//! order; a patch's own labels are folded in only after all of its rows have
//! been emitted.
//!
//! An "average ratio" over a scope is the mean, across earlier patches that
//! touched the scope, of the fraction of that patch's in-scope files carrying
//! the label. Scopes: the file itself, the file's directory, all files of the
//! author's patches, and all files of the patches a reviewer reviewed.

use std::collections::HashMap;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::corpus::{directory_of, ChangedFile, Patch};
use crate::labeling::{FileKey, FileLabels, Label, LabelTable};

pub const FEATURE_COUNT: usize = 37;
pub const COUNT_FEATURES: usize = 9;

/// Column names in fixed schema order.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "c_add",
    "c_rem",
    "c_unchanged",
    "c_add_rev",
    "c_rem_rev",
    "c_unchanged_rev",
    "r_add_rev",
    "r_rem_rev",
    "r_unchanged_rev",
    "file_exp",
    "dir_exp",
    "r_commented_file",
    "r_revised_file",
    "r_hot_spot_file",
    "r_commented_dir",
    "r_revised_dir",
    "r_hot_spot_dir",
    "auth_exp",
    "authfile_exp",
    "authdir_exp",
    "r_commented_author",
    "r_revised_author",
    "r_hot_spot_author",
    "r_commented_authfile",
    "r_revised_authfile",
    "r_hot_spot_authfile",
    "r_commented_authdir",
    "r_revised_authdir",
    "r_hot_spot_authdir",
    "max_reviewers_exp",
    "mean_reviewers_exp",
    "r_commented_max_reviewers",
    "r_revised_max_reviewers",
    "r_hot_spot_max_reviewers",
    "r_commented_mean_reviewers",
    "r_revised_mean_reviewers",
    "r_hot_spot_mean_reviewers",
];

/// Schema positions of the experience features (all ≥ 1).
pub const EXPERIENCE_FEATURES: [usize; 7] = [9, 10, 17, 18, 19, 29, 30];

pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|n| *n == name)
}

pub fn is_ratio_feature(index: usize) -> bool {
    FEATURE_NAMES[index].starts_with("r_")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        feature_index(name).map(|i| self.values[i])
    }
}

pub type FeatureMatrix = IndexMap<FileKey, FeatureVector>;

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Features 1-9 of `file` within `patch`.
pub fn count_features(patch: &Patch, file: &ChangedFile) -> [f64; COUNT_FEATURES] {
    let files = &patch.initial_commit().files;
    let c_add = file.added_count() as f64;
    let c_rem = file.removed_count() as f64;
    let c_unchanged = file.unchanged_count() as f64;
    let add_rev = files.iter().map(|f| f.added_count()).sum::<usize>() as f64;
    let rem_rev = files.iter().map(|f| f.removed_count()).sum::<usize>() as f64;
    let unchanged_rev = files.iter().map(|f| f.unchanged_count()).sum::<usize>() as f64;
    [
        c_add,
        c_rem,
        c_unchanged,
        add_rev,
        rem_rev,
        unchanged_rev,
        ratio(c_add, add_rev),
        ratio(c_rem, rem_rev),
        ratio(c_unchanged, unchanged_rev),
    ]
}

/// Patch count and per-label sums of per-patch labeled fractions.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Accumulator {
    pub patches: u64,
    pub ratio_sums: [f64; 3],
}

impl Accumulator {
    fn add(&mut self, fractions: [f64; 3]) {
        self.patches += 1;
        for (sum, f) in self.ratio_sums.iter_mut().zip(fractions) {
            *sum += f;
        }
    }

    pub fn experience(&self) -> f64 {
        self.patches as f64 + 1.0
    }

    pub fn average(&self, label: Label) -> f64 {
        ratio(self.ratio_sums[label.index()], self.patches as f64)
    }
}

/// History accumulators keyed by file, directory, author, author×file,
/// author×directory and reviewer.
#[derive(Debug, Clone, Default)]
pub struct HistoryState {
    files: HashMap<String, Accumulator>,
    dirs: HashMap<String, Accumulator>,
    authors: HashMap<String, Accumulator>,
    author_files: HashMap<(String, String), Accumulator>,
    author_dirs: HashMap<(String, String), Accumulator>,
    reviewers: HashMap<String, Accumulator>,
}

fn lookup<K: std::hash::Hash + Eq>(map: &HashMap<K, Accumulator>, key: &K) -> Accumulator {
    map.get(key).copied().unwrap_or_default()
}

fn label_fractions<'a>(labels: impl Iterator<Item = &'a FileLabels>) -> [f64; 3] {
    let mut counts = [0usize; 3];
    let mut n = 0usize;
    for l in labels {
        n += 1;
        for label in Label::ALL {
            counts[label.index()] += usize::from(l.get(label));
        }
    }
    counts.map(|c| ratio(c as f64, n as f64))
}

impl HistoryState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Features 10-37 for `file` of `patch`, from history only.
    pub fn history_features(&self, patch: &Patch, file: &ChangedFile) -> [f64; FEATURE_COUNT - COUNT_FEATURES] {
        let author = &patch.author_id;
        let dir = directory_of(&file.path);
        let file_acc = lookup(&self.files, &file.path);
        let dir_acc = lookup(&self.dirs, &dir.to_string());
        let auth_acc = lookup(&self.authors, author);
        let authfile_acc = lookup(&self.author_files, &(author.clone(), file.path.clone()));
        let authdir_acc = lookup(&self.author_dirs, &(author.clone(), dir.to_string()));

        let mut out = Vec::with_capacity(FEATURE_COUNT - COUNT_FEATURES);
        out.push(file_acc.experience());
        out.push(dir_acc.experience());
        out.extend(Label::ALL.map(|l| file_acc.average(l)));
        out.extend(Label::ALL.map(|l| dir_acc.average(l)));
        out.push(auth_acc.experience());
        out.push(authfile_acc.experience());
        out.push(authdir_acc.experience());
        out.extend(Label::ALL.map(|l| auth_acc.average(l)));
        out.extend(Label::ALL.map(|l| authfile_acc.average(l)));
        out.extend(Label::ALL.map(|l| authdir_acc.average(l)));

        let reviewers: Vec<Accumulator> = patch.reviewer_ids.iter().map(|r| lookup(&self.reviewers, r)).collect();
        if reviewers.is_empty() {
            out.extend([1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        } else {
            let n = reviewers.len() as f64;
            let exps = reviewers.iter().map(Accumulator::experience);
            out.push(exps.clone().fold(f64::MIN, f64::max));
            out.push(exps.sum::<f64>() / n);
            out.extend(Label::ALL.map(|l| reviewers.iter().map(|a| a.average(l)).fold(0.0, f64::max)));
            out.extend(Label::ALL.map(|l| reviewers.iter().map(|a| a.average(l)).sum::<f64>() / n));
        }
        out.try_into().expect("28 history features")
    }

    /// Folds a finished patch into every accumulator.
    pub fn record(&mut self, patch: &Patch, labels: &LabelTable) {
        let rows: Vec<(&str, &FileLabels)> = labels.rows_of(&patch.patch_id).collect();
        let all = label_fractions(rows.iter().map(|(_, l)| *l));
        let author = &patch.author_id;

        let mut by_dir: IndexMap<&str, Vec<&FileLabels>> = IndexMap::new();
        for (path, l) in &rows {
            by_dir.entry(directory_of(path)).or_default().push(l);
            let single = label_fractions(std::iter::once(*l));
            self.files.entry(path.to_string()).or_default().add(single);
            self.author_files
                .entry((author.clone(), path.to_string()))
                .or_default()
                .add(single);
        }
        for (dir, ls) in by_dir {
            let frac = label_fractions(ls.into_iter());
            self.dirs.entry(dir.to_string()).or_default().add(frac);
            self.author_dirs
                .entry((author.clone(), dir.to_string()))
                .or_default()
                .add(frac);
        }
        self.authors.entry(author.clone()).or_default().add(all);
        for r in &patch.reviewer_ids {
            self.reviewers.entry(r.clone()).or_default().add(all);
        }
    }
}

/// Single chronological pass over a corpus sorted in corpus order.
pub fn extract_all(patches: &[Patch], labels: &LabelTable) -> FeatureMatrix {
    let mut state = HistoryState::new();
    let mut matrix = FeatureMatrix::new();
    for patch in patches {
        for file in &patch.initial_commit().files {
            let mut values = Vec::with_capacity(FEATURE_COUNT);
            values.extend(count_features(patch, file));
            values.extend(state.history_features(patch, file));
            matrix.insert(FileKey::new(&patch.patch_id, &file.path), FeatureVector { values });
        }
        state.record(patch, labels);
    }
    matrix
}
