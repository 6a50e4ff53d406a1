use serde::{Deserialize, Serialize};

use super::LearningError;
use crate::matrix::Rows;

/// Relative variance floor, scaled by the largest column variance.
pub const VAR_SMOOTHING: f64 = 1e-9;

/// Per-class Gaussian statistics. Index 0 is the negative class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    pub log_priors: [f64; 2],
    pub means: [Vec<f64>; 2],
    pub variances: [Vec<f64>; 2],
    pub epsilon: f64,
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn class_counts(labels: &[bool]) -> [usize; 2] {
    let pos = labels.iter().filter(|&&l| l).count();
    [labels.len() - pos, pos]
}

impl GaussianNb {
    pub fn fit<R: Rows + ?Sized>(rows: &R, labels: &[bool]) -> Self {
        let d = rows.n_cols();
        let counts = class_counts(labels);
        let n = labels.len() as f64;
        let mut sums = [vec![0.0; d], vec![0.0; d]];
        let mut total = vec![0.0; d];
        for (r, &y) in labels.iter().enumerate() {
            let row = rows.dense_row(r);
            for (j, v) in row.into_iter().enumerate() {
                sums[usize::from(y)][j] += v;
                total[j] += v;
            }
        }
        let means = [0, 1].map(|c| sums[c].iter().map(|s| s / counts[c] as f64).collect::<Vec<_>>());
        let grand: Vec<f64> = total.iter().map(|t| t / n).collect();
        let mut sq = [vec![0.0; d], vec![0.0; d]];
        let mut grand_sq = vec![0.0; d];
        for (r, &y) in labels.iter().enumerate() {
            let c = usize::from(y);
            for (j, v) in rows.dense_row(r).into_iter().enumerate() {
                sq[c][j] += (v - means[c][j]).powi(2);
                grand_sq[j] += (v - grand[j]).powi(2);
            }
        }
        let max_var = grand_sq.iter().map(|s| s / n).fold(0.0, f64::max);
        // all-constant data would otherwise leave a zero variance
        let epsilon = if max_var > 0.0 {
            VAR_SMOOTHING * max_var
        } else {
            VAR_SMOOTHING
        };
        let variances = [0, 1].map(|c| sq[c].iter().map(|s| s / counts[c] as f64 + epsilon).collect::<Vec<_>>());
        GaussianNb {
            log_priors: [0, 1].map(|c| (counts[c] as f64 / n).ln()),
            means,
            variances,
            epsilon,
        }
    }

    fn joint_log_likelihood(&self, x: &[f64], c: usize) -> f64 {
        let mut ll = self.log_priors[c];
        for ((&v, &m), &var) in x.iter().zip(&self.means[c]).zip(&self.variances[c]) {
            ll -= 0.5 * ((2.0 * std::f64::consts::PI * var).ln() + (v - m).powi(2) / var);
        }
        ll
    }

    pub fn predict_one(&self, x: &[f64]) -> f64 {
        let j0 = self.joint_log_likelihood(x, 0);
        let j1 = self.joint_log_likelihood(x, 1);
        (j1 - log_sum_exp(j0, j1)).exp().clamp(0.0, 1.0)
    }
}

/// Multinomial event model with additive smoothing, for count features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultinomialNb {
    pub log_priors: [f64; 2],
    pub log_probs: [Vec<f64>; 2],
    pub alpha: f64,
}

impl MultinomialNb {
    pub fn fit<R: Rows + ?Sized>(rows: &R, labels: &[bool], alpha: f64) -> Result<Self, LearningError> {
        let d = rows.n_cols();
        let counts = class_counts(labels);
        let n = labels.len() as f64;
        let mut feature_counts = [vec![0.0; d], vec![0.0; d]];
        for (r, &y) in labels.iter().enumerate() {
            for (j, v) in rows.dense_row(r).into_iter().enumerate() {
                if v < 0.0 {
                    return Err(LearningError::NegativeInput);
                }
                feature_counts[usize::from(y)][j] += v;
            }
        }
        let log_probs = [0, 1].map(|c| {
            let total: f64 = feature_counts[c].iter().sum::<f64>() + alpha * d as f64;
            feature_counts[c]
                .iter()
                .map(|f| ((f + alpha) / total).ln())
                .collect::<Vec<_>>()
        });
        Ok(MultinomialNb {
            log_priors: [0, 1].map(|c| (counts[c] as f64 / n).ln()),
            log_probs,
            alpha,
        })
    }

    pub fn predict_one(&self, x: &[f64]) -> f64 {
        let jll =
            [0, 1].map(|c| self.log_priors[c] + x.iter().zip(&self.log_probs[c]).map(|(v, lp)| v * lp).sum::<f64>());
        (jll[1] - log_sum_exp(jll[0], jll[1])).exp().clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::DenseMatrix;

    fn one_d() -> (DenseMatrix, Vec<bool>) {
        let rows = DenseMatrix::from_rows(&[[-1.0], [-2.0], [-3.0], [1.0], [2.0], [3.0]]);
        (rows, vec![false, false, false, true, true, true])
    }

    #[test]
    fn separated_classes() {
        let (rows, labels) = one_d();
        let nb = GaussianNb::fit(&rows, &labels);
        // closed form: variances 2/3, log-odds at x=2 is (16 - 0) / (2 * 2/3) = 12
        let expected = 1.0 / (1.0 + (-12.0f64).exp());
        assert!((nb.predict_one(&[2.0]) - expected).abs() < 1e-6);
        assert!(nb.predict_one(&[2.0]) > 0.99);
    }

    #[test]
    fn symmetric_query_is_half() {
        let (rows, labels) = one_d();
        let nb = GaussianNb::fit(&rows, &labels);
        assert!((nb.predict_one(&[0.0]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn constant_column_is_smoothed() {
        let rows = DenseMatrix::from_rows(&[[1.0, 5.0], [2.0, 5.0], [3.0, 5.0], [4.0, 5.0]]);
        let nb = GaussianNb::fit(&rows, &[false, false, true, true]);
        let p = nb.predict_one(&[3.5, 5.0]);
        assert!(p.is_finite() && p > 0.5);
        let all_const = DenseMatrix::from_rows(&[[5.0], [5.0]]);
        let nb = GaussianNb::fit(&all_const, &[false, true]);
        assert!((nb.predict_one(&[5.0]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn multinomial_prefers_matching_counts() {
        let rows = DenseMatrix::from_rows(&[[3.0, 0.0], [4.0, 1.0], [0.0, 3.0], [1.0, 5.0]]);
        let nb = MultinomialNb::fit(&rows, &[false, false, true, true], 1.0).unwrap();
        assert!(nb.predict_one(&[0.0, 4.0]) > 0.5);
        assert!(nb.predict_one(&[4.0, 0.0]) < 0.5);
        let neg = DenseMatrix::from_rows(&[[-1.0], [1.0]]);
        assert!(MultinomialNb::fit(&neg, &[false, true], 1.0).is_err());
    }
}
