use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EvaluationError;
use crate::corpus::Patch;
use crate::labeling::FileKey;

pub const SECONDS_PER_DAY: i64 = 86_400;
pub const DEFAULT_PERIOD_DAYS: u32 = 182;

/// Initial-commit files of a chronologically sorted corpus, one row each,
/// in corpus order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RowTable {
    pub keys: Vec<FileKey>,
    pub times: Vec<i64>,
    /// Index of the owning patch in the corpus.
    pub patch: Vec<usize>,
}

impl RowTable {
    pub fn from_corpus(patches: &[Patch]) -> Self {
        let mut t = RowTable::default();
        for (pi, p) in patches.iter().enumerate() {
            for f in &p.initial_commit().files {
                t.keys.push(FileKey::new(&p.patch_id, &f.path));
                t.times.push(p.submitted_at);
                t.patch.push(pi);
            }
        }
        t
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Moves `b` back to the first row of the patch it falls in.
    fn patch_edge(&self, mut b: usize) -> usize {
        while b > 0 && b < self.len() && self.patch[b] == self.patch[b - 1] {
            b -= 1;
        }
        b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Ratio,
    Sliding,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Ratio => "ratio",
            Scheme::Sliding => "sliding",
        })
    }
}

impl FromStr for Scheme {
    type Err = EvaluationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ratio" | "ratio_80_10_10" => Ok(Scheme::Ratio),
            "sliding" | "sliding_window" => Ok(Scheme::Sliding),
            other => Err(EvaluationError::UnknownScheme(other.to_string())),
        }
    }
}

/// Row indices of the three partitions. `window` is set for sliding splits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub id: String,
    pub scheme: Scheme,
    pub window: Option<usize>,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// 80/10/10 split over corpus order. Boundaries at `floor(0.8 n)` and
/// `floor(0.9 n)` move back to the start of the patch they fall in, so no
/// patch straddles two partitions.
pub fn split_ratio(rows: &RowTable) -> Result<Split, EvaluationError> {
    let n = rows.len();
    if n < 10 {
        return Err(EvaluationError::TooFewRows(n));
    }
    let b1 = rows.patch_edge(n * 8 / 10);
    let b2 = rows.patch_edge(n * 9 / 10);
    let split = Split {
        id: "ratio".into(),
        scheme: Scheme::Ratio,
        window: None,
        train: (0..b1).collect(),
        validation: (b1..b2).collect(),
        test: (b2..n).collect(),
    };
    for (name, part) in [
        ("train", &split.train),
        ("validation", &split.validation),
        ("test", &split.test),
    ] {
        if part.is_empty() {
            return Err(EvaluationError::EmptyPartition(name.into()));
        }
    }
    Ok(split)
}

/// Consecutive `period_days` windows anchored at the first timestamp. Each
/// period trains a model validated on the first half of the next period and
/// tested on its second half. Windows with an empty partition are skipped.
pub fn split_sliding(rows: &RowTable, period_days: u32) -> Result<Vec<Split>, EvaluationError> {
    let Some(&t0) = rows.times.iter().min() else {
        return Err(EvaluationError::TooFewPeriods(0));
    };
    let period = i64::from(period_days) * SECONDS_PER_DAY;
    let half = period / 2;
    let period_of = |t: i64| ((t - t0) / period) as usize;
    let n_periods = rows.times.iter().map(|&t| period_of(t)).max().unwrap_or(0) + 1;
    if n_periods < 2 {
        return Err(EvaluationError::TooFewPeriods(n_periods));
    }
    let mut splits = Vec::new();
    for w in 0..n_periods - 1 {
        let next_start = t0 + (w as i64 + 1) * period;
        let mut s = Split {
            id: format!("window{w}"),
            scheme: Scheme::Sliding,
            window: Some(w),
            train: Vec::new(),
            validation: Vec::new(),
            test: Vec::new(),
        };
        for (i, &t) in rows.times.iter().enumerate() {
            let p = period_of(t);
            if p == w {
                s.train.push(i);
            } else if p == w + 1 {
                if t - next_start < half {
                    s.validation.push(i);
                } else {
                    s.test.push(i);
                }
            }
        }
        if s.train.is_empty() || s.validation.is_empty() || s.test.is_empty() {
            log::warn!(
                "skipping window {w}: {} train, {} validation, {} test rows",
                s.train.len(),
                s.validation.len(),
                s.test.len()
            );
            continue;
        }
        splits.push(s);
    }
    Ok(splits)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(patch_sizes: &[usize], times: &[i64]) -> RowTable {
        let mut t = RowTable::default();
        for (pi, (&n, &time)) in patch_sizes.iter().zip(times).enumerate() {
            for f in 0..n {
                t.keys.push(FileKey::new(format!("p{pi}"), format!("f{f}")));
                t.times.push(time);
                t.patch.push(pi);
            }
        }
        t
    }

    #[test]
    fn ten_single_file_patches() {
        let t = table(&[1; 10], &(1..=10).collect::<Vec<_>>());
        let s = split_ratio(&t).unwrap();
        assert_eq!(s.train, (0..8).collect::<Vec<_>>());
        assert_eq!(s.validation, vec![8]);
        assert_eq!(s.test, vec![9]);
    }

    #[test]
    fn boundary_moves_to_patch_start() {
        // 7 single-file patches, then a 3-file patch spanning rows 7..10,
        // then two single-file patches: n = 12, floor(0.8 n) = 9.
        let t = table(&[1, 1, 1, 1, 1, 1, 1, 3, 1, 1], &(1..=10).collect::<Vec<_>>());
        let s = split_ratio(&t).unwrap();
        assert_eq!(s.train, (0..7).collect::<Vec<_>>());
        assert_eq!(s.validation, vec![7, 8, 9]);
        assert_eq!(s.test, vec![10, 11]);
    }

    #[test]
    fn too_few_rows() {
        let t = table(&[1; 5], &[1, 2, 3, 4, 5]);
        assert!(matches!(split_ratio(&t), Err(EvaluationError::TooFewRows(5))));
    }

    #[test]
    fn three_periods_two_windows() {
        let d = SECONDS_PER_DAY;
        let times = [0, 10 * d, 190 * d, 280 * d, 370 * d, 460 * d];
        let t = table(&[1; 6], &times);
        let s = split_sliding(&t, 182).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].train, vec![0, 1]);
        assert_eq!(s[0].validation, vec![2]);
        assert_eq!(s[0].test, vec![3]);
    }

    #[test]
    fn empty_validation_half_skipped() {
        let d = SECONDS_PER_DAY;
        // period 1 has rows only in its second half
        let times = [0, 300 * d, 370 * d, 460 * d];
        let t = table(&[1; 4], &times);
        let s = split_sliding(&t, 182).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].window, Some(1));
    }

    #[test]
    fn single_period_rejected() {
        let t = table(&[1; 3], &[0, 1, 2]);
        assert!(matches!(split_sliding(&t, 182), Err(EvaluationError::TooFewPeriods(1))));
    }
}
