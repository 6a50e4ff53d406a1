//! Classifiers for per-file labels: random forest and naive Bayes, each
//! optionally trained on a SMOTE-balanced set.

mod bayes;
mod forest;
mod smote;

use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bayes::{GaussianNb, MultinomialNb, VAR_SMOOTHING};
pub use forest::{default_max_features, ForestParams, Node, RandomForest, Tree};
pub use smote::{nearest_neighbors, smote, SmoteSample};

use crate::embedding::EmbeddingMatrix;
use crate::matrix::{Rows, Stacked};

pub const ARTIFACT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LearningError {
    #[error("training labels contain a single class")]
    DegenerateLabels,
    #[error("SMOTE needs at least 2 minority rows, got {0}")]
    TooFewMinority(usize),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("operation not supported for {0} models")]
    UnsupportedFamily(Family),
    #[error("{rows} rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("multinomial naive Bayes requires non-negative inputs")]
    NegativeInput,
    #[error("unknown model variant '{0}'")]
    UnknownVariant(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Rf,
    Nb,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Rf => "rf",
            Family::Nb => "nb",
        })
    }
}

/// A model family with or without SMOTE. The declaration order is the
/// tie-break order used in model selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Rf,
    Rfs,
    Nb,
    Nbs,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Rf, Variant::Rfs, Variant::Nb, Variant::Nbs];

    pub fn family(self) -> Family {
        match self {
            Variant::Rf | Variant::Rfs => Family::Rf,
            Variant::Nb | Variant::Nbs => Family::Nb,
        }
    }

    pub fn smote(self) -> bool {
        matches!(self, Variant::Rfs | Variant::Nbs)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Rf => "rf",
            Variant::Rfs => "rfs",
            Variant::Nb => "nb",
            Variant::Nbs => "nbs",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = LearningError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| LearningError::UnknownVariant(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NbKind {
    #[default]
    Gaussian,
    Multinomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparameters {
    pub n_trees: usize,
    pub max_features: Option<usize>,
    pub min_leaf: usize,
    pub smote_k: usize,
    pub nb_kind: NbKind,
    pub nb_alpha: f64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            n_trees: 100,
            max_features: None,
            min_leaf: 1,
            smote_k: 5,
            nb_kind: NbKind::Gaussian,
            nb_alpha: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedModel {
    Forest(RandomForest),
    GaussianNb(GaussianNb),
    MultinomialNb(MultinomialNb),
}

/// A trained classifier with everything needed to reproduce and apply it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format_version: u32,
    pub variant: Variant,
    pub family: Family,
    pub smote: bool,
    pub seed: u64,
    pub hyperparameters: Hyperparameters,
    pub columns: Vec<String>,
    /// Rows the classifier was fitted on, synthetic ones included.
    pub training_rows: usize,
    pub synthetic_rows: usize,
    pub threshold: Option<f64>,
    pub model: FittedModel,
}

impl ModelArtifact {
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string(self)
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

/// The minority label and how many synthetic rows of it balance the classes.
pub fn balance_target(labels: &[bool]) -> (bool, usize) {
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos <= neg {
        (true, neg - pos)
    } else {
        (false, pos - neg)
    }
}

fn fit_model<R: Rows>(
    family: Family,
    rows: &R,
    labels: &[bool],
    seed: u64,
    hp: &Hyperparameters,
) -> Result<FittedModel, LearningError> {
    Ok(match family {
        Family::Rf => {
            let params = ForestParams {
                n_trees: hp.n_trees,
                min_leaf: hp.min_leaf,
                max_features: hp.max_features,
            };
            FittedModel::Forest(RandomForest::fit(rows, labels, &params, seed))
        }
        Family::Nb => match hp.nb_kind {
            NbKind::Gaussian => FittedModel::GaussianNb(GaussianNb::fit(rows, labels)),
            NbKind::Multinomial => FittedModel::MultinomialNb(MultinomialNb::fit(rows, labels, hp.nb_alpha)?),
        },
    })
}

/// Fits `variant` on `rows`. With SMOTE, the minority class is oversampled
/// to the majority count first; a minority of fewer than two rows skips
/// sampling with a warning.
pub fn train<R: Rows>(
    variant: Variant,
    rows: &R,
    labels: &[bool],
    seed: u64,
    hp: &Hyperparameters,
    columns: Vec<String>,
) -> Result<ModelArtifact, LearningError> {
    if rows.n_rows() != labels.len() {
        return Err(LearningError::LengthMismatch {
            rows: rows.n_rows(),
            labels: labels.len(),
        });
    }
    if columns.len() != rows.n_cols() {
        return Err(LearningError::SchemaMismatch(format!(
            "{} column names for {} columns",
            columns.len(),
            rows.n_cols()
        )));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    if pos == 0 || pos == labels.len() {
        return Err(LearningError::DegenerateLabels);
    }

    let mut synthetic_rows = 0;
    let model = if variant.smote() {
        let (minority_label, count) = balance_target(labels);
        let minority: Vec<Vec<f64>> = labels
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l == minority_label)
            .map(|(i, _)| rows.dense_row(i))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        match smote(&minority, hp.smote_k, count, &mut rng) {
            Ok(sample) => {
                synthetic_rows = sample.rows.n_rows();
                let mut all_labels = labels.to_vec();
                all_labels.extend(std::iter::repeat_n(minority_label, synthetic_rows));
                if synthetic_rows == 0 {
                    fit_model(variant.family(), rows, labels, seed, hp)?
                } else {
                    let stacked = Stacked::new(rows, &sample.rows);
                    fit_model(variant.family(), &stacked, &all_labels, seed, hp)?
                }
            }
            Err(LearningError::TooFewMinority(n)) => {
                log::warn!("skipping SMOTE: only {n} minority rows");
                fit_model(variant.family(), rows, labels, seed, hp)?
            }
            Err(e) => return Err(e),
        }
    } else {
        fit_model(variant.family(), rows, labels, seed, hp)?
    };

    Ok(ModelArtifact {
        format_version: ARTIFACT_FORMAT_VERSION,
        variant,
        family: variant.family(),
        smote: variant.smote(),
        seed,
        hyperparameters: *hp,
        columns,
        training_rows: labels.len() + synthetic_rows,
        synthetic_rows,
        threshold: None,
        model,
    })
}

/// Positive-class probability for every row.
pub fn predict_proba<R: Rows>(model: &ModelArtifact, rows: &R) -> Result<Vec<f64>, LearningError> {
    if rows.n_cols() != model.columns.len() {
        return Err(LearningError::SchemaMismatch(format!(
            "model expects {} columns, rows have {}",
            model.columns.len(),
            rows.n_cols()
        )));
    }
    let scores = (0..rows.n_rows())
        .into_par_iter()
        .map(|r| match &model.model {
            FittedModel::Forest(f) => f.predict_one(|c| rows.value(r, c)),
            FittedModel::GaussianNb(nb) => nb.predict_one(&rows.dense_row(r)),
            FittedModel::MultinomialNb(nb) => nb.predict_one(&rows.dense_row(r)),
        })
        .collect();
    Ok(scores)
}

/// Like [`predict_proba`], additionally checking column names.
pub fn predict_matrix(model: &ModelArtifact, matrix: &EmbeddingMatrix) -> Result<Vec<f64>, LearningError> {
    let names = matrix.column_names();
    if names != model.columns {
        let at = names
            .iter()
            .zip(&model.columns)
            .position(|(a, b)| a != b)
            .unwrap_or(names.len().min(model.columns.len()));
        return Err(LearningError::SchemaMismatch(format!(
            "column {at} differs ({} vs {} columns)",
            model.columns.len(),
            names.len()
        )));
    }
    predict_proba(model, matrix)
}

/// Normalized mean decrease in Gini impurity per column, in column order.
pub fn feature_importance(model: &ModelArtifact) -> Result<IndexMap<String, f64>, LearningError> {
    match &model.model {
        FittedModel::Forest(f) => Ok(model.columns.iter().cloned().zip(f.feature_importances()).collect()),
        _ => Err(LearningError::UnsupportedFamily(model.family)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::DenseMatrix;

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn degenerate_labels_rejected() {
        let rows = DenseMatrix::from_rows(&[[1.0], [2.0]]);
        let err = train(
            Variant::Rf,
            &rows,
            &[true, true],
            1,
            &Hyperparameters::default(),
            names(1),
        );
        assert!(matches!(err, Err(LearningError::DegenerateLabels)));
    }

    #[test]
    fn smote_balances_classes() {
        let rows: Vec<[f64; 2]> = (0..100).map(|i| [i as f64, (i % 7) as f64]).collect();
        let labels: Vec<bool> = (0..100).map(|i| i < 10).collect();
        let m = DenseMatrix::from_rows(&rows);
        let art = train(Variant::Nbs, &m, &labels, 4, &Hyperparameters::default(), names(2)).unwrap();
        assert_eq!(art.synthetic_rows, 80);
        assert_eq!(art.training_rows, 180);
    }

    #[test]
    fn nb_has_no_importance() {
        let rows = DenseMatrix::from_rows(&[[1.0], [2.0], [3.0], [4.0]]);
        let art = train(
            Variant::Nb,
            &rows,
            &[false, false, true, true],
            1,
            &Hyperparameters::default(),
            names(1),
        )
        .unwrap();
        assert!(matches!(
            feature_importance(&art),
            Err(LearningError::UnsupportedFamily(Family::Nb))
        ));
    }

    #[test]
    fn schema_checked_on_predict() {
        let rows = DenseMatrix::from_rows(&[[1.0], [2.0], [3.0], [4.0]]);
        let art = train(
            Variant::Rf,
            &rows,
            &[false, false, true, true],
            1,
            &Hyperparameters::default(),
            names(1),
        )
        .unwrap();
        let wide = DenseMatrix::from_rows(&[[1.0, 2.0]]);
        assert!(matches!(
            predict_proba(&art, &wide),
            Err(LearningError::SchemaMismatch(_))
        ));
        let p = predict_proba(&art, &rows).unwrap();
        assert!(p[0] < 0.5 && p[3] > 0.5);
    }

    #[test]
    fn variant_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.as_str().parse::<Variant>().unwrap(), v);
        }
        assert!("svm".parse::<Variant>().is_err());
    }
}
