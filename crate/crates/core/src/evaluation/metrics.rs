use serde::{Deserialize, Serialize};

use super::EvaluationError;

/// Area under the ROC curve from average ranks: the probability that a
/// random positive scores above a random negative, ties counting half.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64, EvaluationError> {
    assert_eq!(scores.len(), labels.len(), "scores and labels must align");
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvaluationError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut pos_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their mean
        let avg = (i + j + 2) as f64 / 2.0;
        let pos_in_group = order[i..=j].iter().filter(|&&k| labels[k]).count();
        pos_rank_sum += avg * pos_in_group as f64;
        i = j + 1;
    }
    let (p, q) = (n_pos as f64, n_neg as f64);
    let u = pos_rank_sum - p * (p + 1.0) / 2.0;
    Ok(u / (p * q))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    /// Predicts positive iff `score >= threshold`.
    pub fn at(scores: &[f64], labels: &[bool], threshold: f64) -> Self {
        let mut c = ConfusionCounts::default();
        for (&s, &y) in scores.iter().zip(labels) {
            match (s >= threshold, y) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// Harmonic mean of precision and recall, 0 when either is 0.
    pub fn f1(&self) -> f64 {
        ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdChoice {
    pub threshold: f64,
    pub f1: f64,
    /// Set when validation labels held a single class.
    pub fallback: bool,
}

pub const FALLBACK_THRESHOLD: f64 = 0.5;

/// The smallest observed score that maximizes F1 when predicting positive
/// for `score >= t`. Single-class labels fall back to 0.5 with a warning.
pub fn threshold_f1(scores: &[f64], labels: &[bool]) -> ThresholdChoice {
    assert_eq!(scores.len(), labels.len(), "scores and labels must align");
    let n_pos = labels.iter().filter(|&&l| l).count();
    if n_pos == 0 || n_pos == labels.len() {
        log::warn!("validation labels hold a single class; using threshold {FALLBACK_THRESHOLD}");
        let f1 = ConfusionCounts::at(scores, labels, FALLBACK_THRESHOLD).f1();
        return ThresholdChoice {
            threshold: FALLBACK_THRESHOLD,
            f1,
            fallback: true,
        };
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    // F1 = 2tp / (2tp + fp + fn) = 2tp / (tp + fp + n_pos); compared exactly
    // as fractions so equal maxima resolve to the smallest threshold.
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut best: Option<(usize, usize, f64)> = None;
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        while i < order.len() && scores[order[i]] == t {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let (num, den) = (2 * tp, tp + fp + n_pos);
        let better = match best {
            None => true,
            Some((bn, bd, _)) => (num as u128) * (bd as u128) >= (bn as u128) * (den as u128),
        };
        if better {
            best = Some((num, den, t));
        }
    }
    let (num, den, threshold) = best.expect("non-empty scores");
    ThresholdChoice {
        threshold,
        f1: num as f64 / den as f64,
        fallback: false,
    }
}

/// Threshold-dependent metrics plus the threshold-free AUC (absent for
/// single-class labels).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub auc: Option<f64>,
    pub f1: f64,
    pub gm: f64,
    pub pre: f64,
    pub rec: f64,
    pub confusion: ConfusionCounts,
}

pub fn metrics(scores: &[f64], labels: &[bool], threshold: f64) -> Metrics {
    let c = ConfusionCounts::at(scores, labels, threshold);
    let (pre, rec) = (c.precision(), c.recall());
    Metrics {
        auc: auc(scores, labels).ok(),
        f1: c.f1(),
        gm: (pre * rec).sqrt(),
        pre,
        rec,
        confusion: c,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auc_examples() {
        let y = [true, true, false, false];
        assert_eq!(auc(&[0.9, 0.8, 0.3, 0.2], &y).unwrap(), 1.0);
        assert_eq!(auc(&[0.5; 4], &y).unwrap(), 0.5);
        assert_eq!(auc(&[0.9, 0.4, 0.6, 0.2], &y).unwrap(), 0.75);
        assert!(matches!(
            auc(&[0.1, 0.2], &[true, true]),
            Err(EvaluationError::SingleClass)
        ));
    }

    #[test]
    fn threshold_examples() {
        let c = threshold_f1(&[0.1, 0.4, 0.6, 0.9], &[false, false, true, true]);
        assert_eq!(c.threshold, 0.6);
        assert_eq!(c.f1, 1.0);
        let c = threshold_f1(&[0.1, 0.4], &[true, true]);
        assert!(c.fallback);
        assert_eq!(c.threshold, 0.5);
    }

    #[test]
    fn metric_identities() {
        let m = metrics(&[0.9, 0.1], &[true, false], 0.5);
        assert_eq!((m.f1, m.gm, m.pre, m.rec), (1.0, 1.0, 1.0, 1.0));
        let m = metrics(&[0.1, 0.9], &[true, false], 0.5);
        assert_eq!((m.f1, m.gm, m.pre, m.rec), (0.0, 0.0, 0.0, 0.0));
        // tp 18, fp 27, fn 2: pre 0.4, rec 0.9
        let mut scores = vec![0.9; 45];
        scores.extend([0.1, 0.1]);
        let labels: Vec<bool> = (0..47).map(|i| !(18..45).contains(&i)).collect();
        let m = metrics(&scores, &labels, 0.5);
        assert!((m.pre - 0.4).abs() < 1e-12 && (m.rec - 0.9).abs() < 1e-12);
        assert!((m.gm - 0.6).abs() < 1e-12);
    }
}
