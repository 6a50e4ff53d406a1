//! File re-ordering within a patch and Recall@k scoring of orderings.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Patch;
use crate::labeling::{FileKey, Label, LabelTable};

#[derive(Debug, Error, PartialEq)]
pub enum OrderingError {
    #[error("no score for file {0}")]
    MissingScore(String),
    #[error("patch is not eligible: {0}")]
    IneligiblePatch(String),
    #[error("unknown ordering policy '{0}'")]
    UnknownPolicy(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    Alphanumeric,
    Predicted,
    Oracle,
    Random,
}

impl Policy {
    pub const ALL: [Policy; 4] = [Policy::Alphanumeric, Policy::Predicted, Policy::Oracle, Policy::Random];

    pub fn as_str(self) -> &'static str {
        match self {
            Policy::Alphanumeric => "alphanumeric",
            Policy::Predicted => "predicted",
            Policy::Oracle => "oracle",
            Policy::Random => "random",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Policy {
    type Err = OrderingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Policy::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| OrderingError::UnknownPolicy(s.into()))
    }
}

/// One changed file of a patch as seen by the ordering policies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderItem {
    pub path: String,
    pub score: Option<f64>,
    pub hot_spot: bool,
}

/// Orders a patch's files. Score-based policies sort descending with ties in
/// byte-wise path order; `Random` shuffles with a generator seeded by `seed`.
pub fn order_files(items: &[OrderItem], policy: Policy, seed: u64) -> Result<Vec<String>, OrderingError> {
    let mut keyed: Vec<(f64, &str)> = Vec::with_capacity(items.len());
    for it in items {
        let score = match policy {
            Policy::Predicted => it.score.ok_or_else(|| OrderingError::MissingScore(it.path.clone()))?,
            Policy::Oracle => f64::from(u8::from(it.hot_spot)),
            Policy::Alphanumeric | Policy::Random => 0.0,
        };
        keyed.push((score, &it.path));
    }
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.as_bytes().cmp(b.1.as_bytes())));
    if policy == Policy::Random {
        keyed.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    Ok(keyed.into_iter().map(|(_, p)| p.to_string()).collect())
}

/// `k = ceil(fraction * size)`.
pub fn cutoff(size: usize, fraction: f64) -> usize {
    (fraction * size as f64).ceil() as usize
}

/// Hot-spots among the first `ceil(fraction * size)` files over the number
/// of hot-spots capped at that `k`.
pub fn recall_at(ordered: &[String], hot_spots: &[&str], fraction: f64) -> Result<f64, OrderingError> {
    if ordered.len() < 2 {
        return Err(OrderingError::IneligiblePatch(format!(
            "{} changed files",
            ordered.len()
        )));
    }
    let hot = ordered.iter().filter(|p| hot_spots.contains(&p.as_str())).count();
    if hot == 0 {
        return Err(OrderingError::IneligiblePatch("no hot-spot".into()));
    }
    let k = cutoff(ordered.len(), fraction);
    let found = ordered[..k].iter().filter(|p| hot_spots.contains(&p.as_str())).count();
    Ok(found as f64 / hot.min(k) as f64)
}

/// Patch-size buckets of the ordering table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SizeBucket {
    #[serde(rename = "2-4")]
    Small,
    #[serde(rename = "5-9")]
    Medium,
    #[serde(rename = ">=10")]
    Large,
}

impl SizeBucket {
    pub const ALL: [SizeBucket; 3] = [SizeBucket::Small, SizeBucket::Medium, SizeBucket::Large];

    pub fn of(size: usize) -> Option<Self> {
        match size {
            0 | 1 => None,
            2..=4 => Some(SizeBucket::Small),
            5..=9 => Some(SizeBucket::Medium),
            _ => Some(SizeBucket::Large),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SizeBucket::Small => "2-4",
            SizeBucket::Medium => "5-9",
            SizeBucket::Large => ">=10",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyRecall {
    pub policy: Policy,
    /// Absent when the bucket holds no eligible patch.
    pub recall_50: Option<f64>,
    pub recall_25: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketReport {
    pub bucket: SizeBucket,
    pub patches: usize,
    /// Eligible patches of this bucket over all patches in the slice.
    pub patch_fraction: f64,
    pub policies: Vec<PolicyRecall>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingReport {
    pub slice_patches: usize,
    pub eligible_patches: usize,
    pub buckets: Vec<BucketReport>,
}

impl OrderingReport {
    pub fn bucket(&self, b: SizeBucket) -> &BucketReport {
        self.buckets
            .iter()
            .find(|r| r.bucket == b)
            .expect("all buckets present")
    }

    pub fn recall(&self, b: SizeBucket, policy: Policy, fraction_50: bool) -> Option<f64> {
        let r = self.bucket(b).policies.iter().find(|p| p.policy == policy)?;
        if fraction_50 {
            r.recall_50
        } else {
            r.recall_25
        }
    }
}

/// Predicted ordering of one patch, as written by the `order` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchOrdering {
    pub patch_id: String,
    pub size: usize,
    pub hot_spots: usize,
    pub ordered: Vec<String>,
    pub scores: Vec<f64>,
}

struct PatchRecalls {
    bucket: SizeBucket,
    /// `[policy][0 = 50%, 1 = 25%]` in `Policy::ALL` order.
    recalls: [[f64; 2]; 4],
}

/// The patches whose files all carry a score, with their order items.
/// Patches with no scored file are outside the slice; a partially scored
/// patch is an error.
pub fn scored_slice<'a>(
    patches: &'a [Patch],
    labels: &LabelTable,
    scores: &HashMap<FileKey, f64>,
) -> Result<Vec<(&'a Patch, Vec<OrderItem>)>, OrderingError> {
    let mut out = Vec::new();
    for p in patches {
        let items: Vec<OrderItem> = p
            .initial_commit()
            .files
            .iter()
            .map(|f| {
                let key = FileKey::new(&p.patch_id, &f.path);
                OrderItem {
                    score: scores.get(&key).copied(),
                    hot_spot: labels.get(&key).is_some_and(|l| l.get(Label::HotSpot)),
                    path: f.path.clone(),
                }
            })
            .collect();
        let scored = items.iter().filter(|i| i.score.is_some()).count();
        if scored == 0 {
            continue;
        }
        if scored < items.len() {
            let missing = items.iter().find(|i| i.score.is_none()).unwrap();
            return Err(OrderingError::MissingScore(format!("{}:{}", p.patch_id, missing.path)));
        }
        out.push((p, items));
    }
    Ok(out)
}

/// Mean Recall@50% and Recall@25% per size bucket and policy over the
/// eligible patches of the scored slice.
pub fn ordering_report(
    patches: &[Patch],
    labels: &LabelTable,
    scores: &HashMap<FileKey, f64>,
    seed: u64,
) -> Result<OrderingReport, OrderingError> {
    let slice = scored_slice(patches, labels, scores)?;
    let per_patch: Vec<Option<PatchRecalls>> = slice
        .par_iter()
        .enumerate()
        .map(|(i, (_, items))| {
            let bucket = SizeBucket::of(items.len())?;
            let hot: Vec<&str> = items.iter().filter(|i| i.hot_spot).map(|i| i.path.as_str()).collect();
            if hot.is_empty() {
                return None;
            }
            let mut recalls = [[0.0; 2]; 4];
            for (pi, policy) in Policy::ALL.into_iter().enumerate() {
                let ordered = order_files(items, policy, seed.wrapping_add(i as u64)).ok()?;
                for (fi, fraction) in [0.5, 0.25].into_iter().enumerate() {
                    recalls[pi][fi] = recall_at(&ordered, &hot, fraction).ok()?;
                }
            }
            Some(PatchRecalls { bucket, recalls })
        })
        .collect();
    let eligible: Vec<&PatchRecalls> = per_patch.iter().flatten().collect();
    let buckets = SizeBucket::ALL
        .into_iter()
        .map(|b| {
            let members: Vec<&&PatchRecalls> = eligible.iter().filter(|r| r.bucket == b).collect();
            let mean = |pi: usize, fi: usize| {
                (!members.is_empty())
                    .then(|| members.iter().map(|r| r.recalls[pi][fi]).sum::<f64>() / members.len() as f64)
            };
            BucketReport {
                bucket: b,
                patches: members.len(),
                patch_fraction: if slice.is_empty() {
                    0.0
                } else {
                    members.len() as f64 / slice.len() as f64
                },
                policies: Policy::ALL
                    .into_iter()
                    .enumerate()
                    .map(|(pi, policy)| PolicyRecall {
                        policy,
                        recall_50: mean(pi, 0),
                        recall_25: mean(pi, 1),
                    })
                    .collect(),
            }
        })
        .collect();
    Ok(OrderingReport {
        slice_patches: slice.len(),
        eligible_patches: eligible.len(),
        buckets,
    })
}

/// Predicted orderings of every patch in the scored slice.
pub fn predicted_orderings(
    patches: &[Patch],
    labels: &LabelTable,
    scores: &HashMap<FileKey, f64>,
) -> Result<Vec<PatchOrdering>, OrderingError> {
    scored_slice(patches, labels, scores)?
        .into_iter()
        .map(|(p, items)| {
            let ordered = order_files(&items, Policy::Predicted, 0)?;
            let by_path: HashMap<&str, f64> = items
                .iter()
                .map(|i| (i.path.as_str(), i.score.unwrap_or(0.0)))
                .collect();
            Ok(PatchOrdering {
                patch_id: p.patch_id.clone(),
                size: items.len(),
                hot_spots: items.iter().filter(|i| i.hot_spot).count(),
                scores: ordered.iter().map(|o| by_path[o.as_str()]).collect(),
                ordered,
            })
        })
        .collect()
}
