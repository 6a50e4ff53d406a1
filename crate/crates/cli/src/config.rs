//! Pipeline configuration: defaults, JSON config file, command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use review_radar::embedding::EmbeddingSpec;
use review_radar::evaluation::{ExperimentConfig, Scheme, DEFAULT_PERIOD_DAYS};
use review_radar::labeling::{CommentsScope, Label};
use review_radar::learning::{Hyperparameters, NbKind, Variant};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::UsageError;

pub const CONFIG_ENV: &str = "REVIEW_RADAR_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: Option<PathBuf>,
    /// Dataset name in reports; defaults to the corpus file stem.
    pub dataset: Option<String>,
    pub external_vectors: Option<PathBuf>,
    pub context_limit: usize,
    pub comments_scope: CommentsScope,
    pub spec: String,
    pub label: Label,
    pub scheme: Scheme,
    pub seeds: Vec<u64>,
    pub variants: Vec<Variant>,
    pub n_trees: usize,
    pub max_features: Option<usize>,
    pub min_leaf: usize,
    pub k_smote: usize,
    pub nb_kind: NbKind,
    pub nb_alpha: f64,
    pub alpha: f64,
    pub period_days: u32,
    pub ordering_seed: u64,
    pub out: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let hp = Hyperparameters::default();
        PipelineConfig {
            corpus: None,
            dataset: None,
            external_vectors: None,
            context_limit: review_radar::corpus::DEFAULT_CONTEXT_LIMIT,
            comments_scope: CommentsScope::Any,
            spec: "bow+add_remove+all".into(),
            label: Label::HotSpot,
            scheme: Scheme::Ratio,
            seeds: vec![1, 2, 3, 4, 5],
            variants: Variant::ALL.to_vec(),
            n_trees: hp.n_trees,
            max_features: hp.max_features,
            min_leaf: hp.min_leaf,
            k_smote: hp.smote_k,
            nb_kind: hp.nb_kind,
            nb_alpha: hp.nb_alpha,
            alpha: review_radar::stats::DEFAULT_ALPHA,
            period_days: DEFAULT_PERIOD_DAYS,
            ordering_seed: 0,
            out: PathBuf::from("out"),
        }
    }
}

/// Values given on the command line; `None` leaves the config value alone.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub corpus: Option<PathBuf>,
    pub dataset: Option<String>,
    pub external_vectors: Option<PathBuf>,
    pub label: Option<String>,
    pub spec: Option<String>,
    pub scheme: Option<String>,
    pub seeds: Option<String>,
    pub out: Option<PathBuf>,
}

pub fn parse_seeds(text: &str) -> Result<Vec<u64>, UsageError> {
    let mut seeds = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let (a, b) = (parse_seed(a)?, parse_seed(b.trim_start_matches('='))?);
            if a > b {
                return Err(UsageError(format!("empty seed range `{part}`")));
            }
            seeds.extend(a..=b);
        } else {
            seeds.push(parse_seed(part)?);
        }
    }
    Ok(seeds)
}

fn parse_seed(s: &str) -> Result<u64, UsageError> {
    s.trim().parse().map_err(|_| UsageError(format!("invalid seed `{s}`")))
}

impl PipelineConfig {
    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| UsageError(format!("invalid config {}: {e}", path.display())).into())
    }

    /// Flags over the config file (explicit path, else the environment
    /// variable) over defaults.
    pub fn resolve(config_path: Option<&Path>, overrides: &Overrides) -> anyhow::Result<Self> {
        let env_path = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
        let mut cfg = match config_path.map(Path::to_path_buf).or(env_path) {
            Some(p) => Self::from_file(&p)?,
            None => Self::default(),
        };
        let o = overrides.clone();
        if let Some(v) = o.corpus {
            cfg.corpus = Some(v);
        }
        if let Some(v) = o.dataset {
            cfg.dataset = Some(v);
        }
        if let Some(v) = o.external_vectors {
            cfg.external_vectors = Some(v);
        }
        if let Some(v) = o.label {
            cfg.label = v.parse().map_err(|e| UsageError(format!("{e}")))?;
        }
        if let Some(v) = o.spec {
            cfg.spec = v;
        }
        if let Some(v) = o.scheme {
            cfg.scheme = v.parse().map_err(|e| UsageError(format!("{e}")))?;
        }
        if let Some(v) = o.seeds {
            cfg.seeds = parse_seeds(&v)?;
        }
        if let Some(v) = o.out {
            cfg.out = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), UsageError> {
        self.embedding_spec()?;
        let fail = |m: &str| Err(UsageError(m.to_string()));
        if self.seeds.is_empty() {
            return fail("at least one seed is required");
        }
        if self.variants.is_empty() {
            return fail("at least one model variant is required");
        }
        if self.n_trees == 0 {
            return fail("n_trees must be at least 1");
        }
        if self.min_leaf == 0 {
            return fail("min_leaf must be at least 1");
        }
        if self.k_smote == 0 {
            return fail("k_smote must be at least 1");
        }
        if self.max_features == Some(0) {
            return fail("max_features must be at least 1");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return fail("alpha must lie in (0, 1)");
        }
        if self.nb_alpha <= 0.0 {
            return fail("nb_alpha must be positive");
        }
        if self.period_days < 2 {
            return fail("period_days must be at least 2");
        }
        Ok(())
    }

    pub fn embedding_spec(&self) -> Result<EmbeddingSpec, UsageError> {
        self.spec
            .parse()
            .map_err(|e| UsageError(format!("invalid --spec `{}`: {e}", self.spec)))
    }

    pub fn corpus_path(&self) -> Result<&Path, UsageError> {
        self.corpus
            .as_deref()
            .ok_or_else(|| UsageError("no corpus given (use --corpus or the config file)".into()))
    }

    pub fn dataset_name(&self) -> String {
        self.dataset.clone().unwrap_or_else(|| {
            self.corpus
                .as_deref()
                .and_then(Path::file_stem)
                .map_or_else(|| "corpus".to_string(), |s| s.to_string_lossy().into_owned())
        })
    }

    pub fn hyperparameters(&self) -> Hyperparameters {
        Hyperparameters {
            n_trees: self.n_trees,
            max_features: self.max_features,
            min_leaf: self.min_leaf,
            smote_k: self.k_smote,
            nb_kind: self.nb_kind,
            nb_alpha: self.nb_alpha,
        }
    }

    pub fn experiment(&self) -> Result<ExperimentConfig, UsageError> {
        let mut e = ExperimentConfig::new(self.embedding_spec()?, self.label, self.scheme);
        e.seeds = self.seeds.clone();
        e.variants = self.variants.clone();
        e.hyperparameters = self.hyperparameters();
        e.period_days = self.period_days;
        Ok(e)
    }

    /// SHA-256 of the configuration with file locations removed, so the
    /// hash follows settings rather than where files live.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.corpus = None;
        c.external_vectors = None;
        c.out = PathBuf::new();
        c.dataset = Some(self.dataset_name());
        let json = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}
