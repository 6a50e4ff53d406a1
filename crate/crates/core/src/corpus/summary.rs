use serde::{Deserialize, Serialize};

use super::Patch;
use crate::labeling::{Label, LabelTable};

/// Share of labeled units for one label, at patch and file granularity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelShare {
    pub label: Label,
    /// Patches with at least one file carrying the label.
    pub patches: usize,
    pub patch_ratio: f64,
    pub files: usize,
    pub file_ratio: f64,
}

/// Corpus statistics in the layout of a per-dataset revision-activity table.
/// Only initial-commit files are counted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub patch_count: usize,
    pub changed_file_count: usize,
    pub first_submission: Option<i64>,
    pub last_submission: Option<i64>,
    pub labels: Vec<LabelShare>,
}

impl SummaryReport {
    pub fn share(&self, label: Label) -> &LabelShare {
        self.labels
            .iter()
            .find(|s| s.label == label)
            .expect("all labels present")
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn corpus_summary(patches: &[Patch], labels: &LabelTable) -> SummaryReport {
    let patch_count = patches.len();
    let changed_file_count: usize = patches.iter().map(|p| p.initial_commit().files.len()).sum();
    let shares = Label::ALL
        .iter()
        .map(|&label| {
            let mut files = 0;
            let mut hit_patches = 0;
            for patch in patches {
                let n = labels.rows_of(&patch.patch_id).filter(|(_, l)| l.get(label)).count();
                files += n;
                hit_patches += usize::from(n > 0);
            }
            LabelShare {
                label,
                patches: hit_patches,
                patch_ratio: ratio(hit_patches, patch_count),
                files,
                file_ratio: ratio(files, changed_file_count),
            }
        })
        .collect();
    SummaryReport {
        patch_count,
        changed_file_count,
        first_submission: patches.iter().map(|p| p.submitted_at).min(),
        last_submission: patches.iter().map(|p| p.submitted_at).max(),
        labels: shares,
    }
}
