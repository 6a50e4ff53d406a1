//! Time-respecting splits, threshold calibration, metrics and multi-seed
//! experiment runs.

mod experiment;
mod metrics;
mod split;

use thiserror::Error;

pub use experiment::{
    median_index, prepare_split, prepare_splits, run_experiment, run_split, select_model, Dataset, EvaluationReport,
    ExperimentConfig, PreparedSplit, RunResult, Selection,
};
pub use metrics::{auc, metrics, threshold_f1, ConfusionCounts, Metrics, ThresholdChoice, FALLBACK_THRESHOLD};
pub use split::{split_ratio, split_sliding, RowTable, Scheme, Split, DEFAULT_PERIOD_DAYS, SECONDS_PER_DAY};

use crate::embedding::EmbeddingError;
use crate::learning::LearningError;

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("need at least 10 rows for a ratio split, got {0}")]
    TooFewRows(usize),
    #[error("need at least 2 periods for sliding windows, got {0}")]
    TooFewPeriods(usize),
    #[error("{0} partition is empty after patch-boundary adjustment")]
    EmptyPartition(String),
    #[error("labels hold a single class")]
    SingleClass,
    #[error("unknown split scheme '{0}'")]
    UnknownScheme(String),
    #[error("no seeds configured")]
    NoSeeds,
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Learning(#[from] LearningError),
}
