use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{metrics, threshold_f1};
use super::split::{split_ratio, split_sliding, RowTable, Scheme, Split, DEFAULT_PERIOD_DAYS};
use super::EvaluationError;
use crate::corpus::Patch;
use crate::embedding::{
    build_embedding, Documents, EmbeddingInputs, EmbeddingMatrix, EmbeddingSpec, ExternalVectors, TextModel,
};
use crate::features::{extract_all, FeatureMatrix};
use crate::labeling::{label_all, CommentsScope, FileKey, Label, LabelTable};
use crate::learning::{predict_proba, train, Hyperparameters, ModelArtifact, Variant};
use crate::matrix::RowSubset;

/// A corpus with everything derived from it that experiments need.
pub struct Dataset {
    pub name: String,
    pub patches: Vec<Patch>,
    pub rows: RowTable,
    pub labels: LabelTable,
    pub features: FeatureMatrix,
    pub documents: Documents,
    pub external: Option<ExternalVectors>,
}

impl Dataset {
    /// `patches` must already be in corpus order.
    pub fn build(
        name: impl Into<String>,
        patches: Vec<Patch>,
        scope: CommentsScope,
        external: Option<ExternalVectors>,
    ) -> Self {
        let labels = label_all(&patches, scope);
        let features = extract_all(&patches, &labels);
        Dataset {
            name: name.into(),
            rows: RowTable::from_corpus(&patches),
            documents: Documents::from_corpus(&patches),
            patches,
            labels,
            features,
            external,
        }
    }

    pub fn label_of(&self, key: &FileKey, label: Label) -> bool {
        self.labels.get(key).is_some_and(|l| l.get(label))
    }

    pub fn inputs(&self) -> EmbeddingInputs<'_> {
        EmbeddingInputs {
            documents: &self.documents,
            features: &self.features,
            external: self.external.as_ref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub spec: EmbeddingSpec,
    pub label: Label,
    pub scheme: Scheme,
    pub seeds: Vec<u64>,
    pub variants: Vec<Variant>,
    pub hyperparameters: Hyperparameters,
    pub period_days: u32,
}

impl ExperimentConfig {
    pub fn new(spec: EmbeddingSpec, label: Label, scheme: Scheme) -> Self {
        ExperimentConfig {
            spec,
            label,
            scheme,
            seeds: vec![1, 2, 3, 4, 5],
            variants: Variant::ALL.to_vec(),
            hyperparameters: Hyperparameters::default(),
            period_days: DEFAULT_PERIOD_DAYS,
        }
    }
}

/// One split with its embedding. Matrix rows hold the train, validation and
/// test rows in that order.
pub struct PreparedSplit {
    pub split: Split,
    pub text: TextModel,
    pub matrix: EmbeddingMatrix,
    pub labels: Vec<bool>,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl PreparedSplit {
    pub fn test_keys(&self) -> &[FileKey] {
        &self.matrix.keys()[self.test[0]..]
    }

    fn train_is_degenerate(&self) -> bool {
        let pos = self.train.iter().filter(|&&i| self.labels[i]).count();
        pos == 0 || pos == self.train.len()
    }
}

/// Fits the text model on the training rows only and embeds all three
/// partitions with it.
pub fn prepare_split(
    data: &Dataset,
    spec: &EmbeddingSpec,
    label: Label,
    split: Split,
) -> Result<PreparedSplit, EvaluationError> {
    let pick = |idx: &[usize]| idx.iter().map(|&i| data.rows.keys[i].clone()).collect::<Vec<_>>();
    let train_keys = pick(&split.train);
    let text = TextModel::fit(spec, &data.documents, &train_keys);
    let mut keys = train_keys;
    keys.extend(pick(&split.validation));
    keys.extend(pick(&split.test));
    let matrix = build_embedding(spec, &keys, &text, &data.inputs())?;
    let labels = keys.iter().map(|k| data.label_of(k, label)).collect();
    let a = split.train.len();
    let b = a + split.validation.len();
    Ok(PreparedSplit {
        train: (0..a).collect(),
        validation: (a..b).collect(),
        test: (b..keys.len()).collect(),
        split,
        text,
        matrix,
        labels,
    })
}

/// Metrics of one trained model on one split's test partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub dataset: String,
    pub label: Label,
    pub spec: String,
    pub variant: Variant,
    pub scheme: Scheme,
    pub seed: u64,
    pub window: Option<usize>,
    pub split_id: String,
    pub threshold: f64,
    pub val_f1: f64,
    pub auc: Option<f64>,
    pub f1: f64,
    pub gm: f64,
    pub pre: f64,
    pub rec: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub train_rows: usize,
    pub test_rows: usize,
}

pub struct RunResult {
    pub report: EvaluationReport,
    pub model: ModelArtifact,
    pub test_scores: Vec<f64>,
}

fn pick(values: &[bool], idx: &[usize]) -> Vec<bool> {
    idx.iter().map(|&i| values[i]).collect()
}

/// Trains on the train rows, calibrates the threshold on validation and
/// scores the test rows.
pub fn run_split(
    data: &Dataset,
    config: &ExperimentConfig,
    prepared: &PreparedSplit,
    variant: Variant,
    seed: u64,
) -> Result<RunResult, EvaluationError> {
    let m = &prepared.matrix;
    let train_rows = RowSubset::new(m, &prepared.train);
    let mut model = train(
        variant,
        &train_rows,
        &pick(&prepared.labels, &prepared.train),
        seed,
        &config.hyperparameters,
        m.column_names(),
    )?;
    let val_scores = predict_proba(&model, &RowSubset::new(m, &prepared.validation))?;
    let choice = threshold_f1(&val_scores, &pick(&prepared.labels, &prepared.validation));
    model.threshold = Some(choice.threshold);
    let test_scores = predict_proba(&model, &RowSubset::new(m, &prepared.test))?;
    let test_labels = pick(&prepared.labels, &prepared.test);
    let met = metrics(&test_scores, &test_labels, choice.threshold);
    let report = EvaluationReport {
        dataset: data.name.clone(),
        label: config.label,
        spec: config.spec.to_string(),
        variant,
        scheme: prepared.split.scheme,
        seed,
        window: prepared.split.window,
        split_id: prepared.split.id.clone(),
        threshold: choice.threshold,
        val_f1: choice.f1,
        auc: met.auc,
        f1: met.f1,
        gm: met.gm,
        pre: met.pre,
        rec: met.rec,
        tp: met.confusion.tp,
        fp: met.confusion.fp,
        tn: met.confusion.tn,
        fn_: met.confusion.fn_,
        train_rows: prepared.train.len(),
        test_rows: prepared.test.len(),
    };
    Ok(RunResult {
        report,
        model,
        test_scores,
    })
}

/// The splits of `config.scheme` over the dataset, each prepared.
pub fn prepare_splits(data: &Dataset, config: &ExperimentConfig) -> Result<Vec<PreparedSplit>, EvaluationError> {
    let splits = match config.scheme {
        Scheme::Ratio => vec![split_ratio(&data.rows)?],
        Scheme::Sliding => split_sliding(&data.rows, config.period_days)?,
    };
    splits
        .into_iter()
        .map(|s| prepare_split(data, &config.spec, config.label, s))
        .collect()
}

/// Every (split, variant, seed) run in a fixed order: split, then variant,
/// then seed. The ratio scheme runs every seed; the sliding scheme runs the
/// first seed once per window. Windows whose training rows hold a single
/// class are skipped with a warning.
pub fn run_experiment(data: &Dataset, config: &ExperimentConfig) -> Result<Vec<EvaluationReport>, EvaluationError> {
    if config.seeds.is_empty() {
        return Err(EvaluationError::NoSeeds);
    }
    let prepared = prepare_splits(data, config)?;
    let seeds: &[u64] = match config.scheme {
        Scheme::Ratio => &config.seeds,
        Scheme::Sliding => &config.seeds[..1],
    };
    let mut jobs = Vec::new();
    for p in &prepared {
        if config.scheme == Scheme::Sliding && p.train_is_degenerate() {
            log::warn!("skipping {}: training labels hold a single class", p.split.id);
            continue;
        }
        for &variant in &config.variants {
            for &seed in seeds {
                jobs.push((p, variant, seed));
            }
        }
    }
    jobs.into_par_iter()
        .map(|(p, variant, seed)| run_split(data, config, p, variant, seed).map(|r| r.report))
        .collect()
}

/// The variant with the best median validation F1 and its median run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub variant: Variant,
    pub median_val_f1: f64,
    pub representative: EvaluationReport,
}

/// Lower median: the element at `(n - 1) / 2` after sorting.
pub fn median_index(n: usize) -> usize {
    n.saturating_sub(1) / 2
}

/// Picks the variant with the highest median validation F1. Exact ties go to
/// the earlier variant in `rf, rfs, nb, nbs` order. The representative is
/// the run whose validation F1 is that median.
pub fn select_model(reports: &[EvaluationReport]) -> Option<Selection> {
    let mut best: Option<Selection> = None;
    for variant in Variant::ALL {
        let mut runs: Vec<&EvaluationReport> = reports.iter().filter(|r| r.variant == variant).collect();
        if runs.is_empty() {
            continue;
        }
        runs.sort_by(|a, b| a.val_f1.total_cmp(&b.val_f1));
        let rep = runs[median_index(runs.len())];
        if best.as_ref().is_none_or(|b| rep.val_f1 > b.median_val_f1) {
            best = Some(Selection {
                variant,
                median_val_f1: rep.val_f1,
                representative: rep.clone(),
            });
        }
    }
    best
}
