//! Review hot-spot analytics.
//!
//! Labels the changed files of code-review patches as commented, revised or
//! hot-spot, derives review-process features and text embeddings, trains
//! per-label classifiers, evaluates them on time-respecting splits, and
//! re-orders a patch's files by predicted hot-spot probability.

pub mod corpus;
pub mod embedding;
pub mod evaluation;
pub mod features;
pub mod labeling;
pub mod learning;
pub mod matrix;
pub mod ordering;
pub mod stats;
pub mod synthetic;
