//! Paired significance testing between embedding setups.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::evaluation::EvaluationReport;
use crate::labeling::Label;

/// Largest sample size for which the exact null distribution is used.
pub const EXACT_MAX_N: usize = 25;
pub const DEFAULT_ALPHA: f64 = 0.01;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("runs are misaligned: {0}")]
    MisalignedRuns(String),
    #[error("unknown metric '{0}'")]
    UnknownMetric(String),
    #[error("unknown grouping '{0}'")]
    UnknownGrouping(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WilcoxonMethod {
    Exact,
    Normal,
    /// Every difference was zero.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    pub p_value: f64,
    /// Sum of the ranks of positive differences.
    pub w_plus: f64,
    /// Non-zero differences.
    pub n: usize,
    pub method: WilcoxonMethod,
}

/// Average ranks (1-based) of `values`, ties sharing their mean rank.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j + 2) as f64 / 2.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Number of sign assignments reaching each sum of the given integer
/// weights.
fn subset_sum_counts(weights: &[usize]) -> Vec<f64> {
    let total: usize = weights.iter().sum();
    let mut counts = vec![0.0; total + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &w in weights {
        for s in (0..=reach).rev() {
            if counts[s] > 0.0 {
                counts[s + w] += counts[s];
            }
        }
        reach += w;
    }
    counts
}

/// Two-sided Wilcoxon signed-rank test of `x - y`. Zero differences are
/// dropped and tied magnitudes get average ranks. Up to 25 differences the
/// exact null distribution is enumerated; beyond that a tie-corrected normal
/// approximation with continuity correction is used.
pub fn wilcoxon_paired(x: &[f64], y: &[f64]) -> WilcoxonResult {
    assert_eq!(x.len(), y.len(), "paired samples must have equal length");
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|v| *v != 0.0).collect();
    let n = d.len();
    if n == 0 {
        log::warn!("all paired differences are zero; p = 1");
        return WilcoxonResult {
            p_value: 1.0,
            w_plus: 0.0,
            n: 0,
            method: WilcoxonMethod::Degenerate,
        };
    }
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let ranks = average_ranks(&abs);
    let w_plus: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    if n <= EXACT_MAX_N {
        // average ranks are multiples of 1/2, so doubled ranks are integers
        let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
        let counts = subset_sum_counts(&doubled);
        let w2 = (w_plus * 2.0).round() as usize;
        let total = 2f64.powi(n as i32);
        let lower: f64 = counts[..=w2].iter().sum::<f64>() / total;
        let upper: f64 = counts[w2..].iter().sum::<f64>() / total;
        return WilcoxonResult {
            p_value: (2.0 * lower.min(upper)).min(1.0),
            w_plus,
            n,
            method: WilcoxonMethod::Exact,
        };
    }
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut sorted = abs.clone();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|v| **v == sorted[i]).count();
        let t = j as f64;
        tie_term += t * t * t - t;
        i += j;
    }
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let p_value = if var <= 0.0 {
        1.0
    } else {
        let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
        erfc(z / std::f64::consts::SQRT_2).min(1.0)
    };
    WilcoxonResult {
        p_value,
        w_plus,
        n,
        method: WilcoxonMethod::Normal,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Magnitude {
    Negligible,
    Small,
    Medium,
    Large,
}

impl Magnitude {
    pub fn of(delta: f64) -> Self {
        let d = delta.abs();
        if d < 0.147 {
            Magnitude::Negligible
        } else if d < 0.33 {
            Magnitude::Small
        } else if d < 0.474 {
            Magnitude::Medium
        } else {
            Magnitude::Large
        }
    }
}

impl fmt::Display for Magnitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Magnitude::Negligible => "negligible",
            Magnitude::Small => "small",
            Magnitude::Medium => "medium",
            Magnitude::Large => "large",
        })
    }
}

/// Cliff's delta of `x` over `y` with its magnitude band. Panics on empty
/// input.
pub fn cliffs_delta(x: &[f64], y: &[f64]) -> (f64, Magnitude) {
    assert!(!x.is_empty() && !y.is_empty(), "cliffs_delta needs non-empty samples");
    let mut sorted = y.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut dominance: i64 = 0;
    for &v in x {
        let below = sorted.partition_point(|&s| s < v);
        let not_above = sorted.partition_point(|&s| s <= v);
        let above = sorted.len() - not_above;
        dominance += below as i64 - above as i64;
    }
    let delta = dominance as f64 / (x.len() * y.len()) as f64;
    (delta, Magnitude::of(delta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Auc,
    F1,
    Gm,
    Pre,
    Rec,
}

impl Metric {
    pub const ALL: [Metric; 5] = [Metric::Auc, Metric::F1, Metric::Gm, Metric::Pre, Metric::Rec];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Auc => "auc",
            Metric::F1 => "f1",
            Metric::Gm => "gm",
            Metric::Pre => "pre",
            Metric::Rec => "rec",
        }
    }

    /// AUC is 0.5 for single-class test partitions.
    pub fn of(self, r: &EvaluationReport) -> f64 {
        match self {
            Metric::Auc => r.auc.unwrap_or(0.5),
            Metric::F1 => r.f1,
            Metric::Gm => r.gm,
            Metric::Pre => r.pre,
            Metric::Rec => r.rec,
        }
    }
}

impl FromStr for Metric {
    type Err = StatsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| StatsError::UnknownMetric(s.into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grouping {
    Open,
    Closed,
    All,
}

impl Grouping {
    pub fn as_str(self) -> &'static str {
        match self {
            Grouping::Open => "open",
            Grouping::Closed => "closed",
            Grouping::All => "all",
        }
    }
}

impl FromStr for Grouping {
    type Err = StatsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "open" => Ok(Grouping::Open),
            "closed" => Ok(Grouping::Closed),
            "all" => Ok(Grouping::All),
            other => Err(StatsError::UnknownGrouping(other.into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub grouping: Grouping,
    pub metric: Metric,
    pub label: Label,
}

/// Run identity within a dataset: the window for sliding runs, else the seed.
fn run_key(r: &EvaluationReport) -> (u64, u64) {
    match r.window {
        Some(w) => (1, w as u64),
        None => (0, r.seed),
    }
}

type RunsByDataset<'a> = BTreeMap<&'a str, BTreeMap<(u64, u64), &'a EvaluationReport>>;

fn runs_by_dataset<'a>(
    reports: &'a [EvaluationReport],
    label: Label,
    setup: &str,
) -> Result<RunsByDataset<'a>, StatsError> {
    let mut out = RunsByDataset::new();
    for r in reports.iter().filter(|r| r.label == label) {
        if out.entry(&r.dataset).or_default().insert(run_key(r), r).is_some() {
            return Err(StatsError::MisalignedRuns(format!(
                "setup {setup} has two runs for dataset {} with key {:?}",
                r.dataset,
                run_key(r)
            )));
        }
    }
    Ok(out)
}

/// Aligns two setups' runs into paired vectors, dataset-major in the order
/// of `datasets` and run-minor in seed (or window) order. Each setup must
/// hold exactly one run per key; pass the reports of one variant.
pub fn build_paired_vectors(
    a: &[EvaluationReport],
    b: &[EvaluationReport],
    datasets: &[String],
    grouping: Grouping,
    metric: Metric,
    label: Label,
) -> Result<PairedSample, StatsError> {
    let ra = runs_by_dataset(a, label, "A")?;
    let rb = runs_by_dataset(b, label, "B")?;
    let mut sample = PairedSample {
        x: Vec::new(),
        y: Vec::new(),
        grouping,
        metric,
        label,
    };
    for ds in datasets {
        let (Some(xa), Some(xb)) = (ra.get(ds.as_str()), rb.get(ds.as_str())) else {
            return Err(StatsError::MisalignedRuns(format!("dataset {ds} missing from a setup")));
        };
        if xa.keys().ne(xb.keys()) {
            return Err(StatsError::MisalignedRuns(format!(
                "dataset {ds}: runs {:?} vs {:?}",
                xa.keys().collect::<Vec<_>>(),
                xb.keys().collect::<Vec<_>>()
            )));
        }
        for (ra, rb) in xa.values().zip(xb.values()) {
            sample.x.push(metric.of(ra));
            sample.y.push(metric.of(rb));
        }
    }
    Ok(sample)
}
