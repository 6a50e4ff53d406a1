//! Per-file embeddings: bag-of-words or external text blocks for the added
//! and removed lines, concatenated with a selection of review-process
//! features.

mod external;
mod tokenize;
mod vocab;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use external::{load_external_vectors, read_external_vectors, ExternalVectors, Stream};
pub use tokenize::{preprocess_code, NUMBER_TOKEN};
pub use vocab::{fit_vocabulary, transform_bow, Vocabulary};

use crate::corpus::Patch;
use crate::features::{FeatureMatrix, COUNT_FEATURES, FEATURE_COUNT, FEATURE_NAMES};
use crate::labeling::FileKey;
use crate::matrix::{Rows, SparseVec};

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("vector dimension mismatch at line {line_no}: expected {expected}, found {found}")]
    DimensionMismatch {
        line_no: usize,
        expected: usize,
        found: usize,
    },
    #[error("missing external vector for {}:{} ({:?})", .0.patch_id, .0.path, .1)]
    MissingVector(FileKey, Stream),
    #[error("missing feature row for {}:{}", .0.patch_id, .0.path)]
    MissingFeatures(FileKey),
    #[error("invalid embedding spec: {0}")]
    InvalidSpec(String),
    #[error("schema error at line {line_no}: {reason}")]
    Schema { line_no: usize, reason: String },
    #[error("block layout does not match spec: {0}")]
    Layout(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextKind {
    None,
    Bow,
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Streams {
    AddOnly,
    AddAndRemove,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    None,
    AddRem,
    Count,
    Hist,
    All,
}

impl FeatureSet {
    /// Schema positions selected by the set.
    pub fn indices(self) -> Vec<usize> {
        match self {
            FeatureSet::None => vec![],
            FeatureSet::AddRem => vec![0, 1],
            FeatureSet::Count => (0..COUNT_FEATURES).collect(),
            FeatureSet::Hist => (COUNT_FEATURES..FEATURE_COUNT).collect(),
            FeatureSet::All => (0..FEATURE_COUNT).collect(),
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            FeatureSet::None => "none",
            FeatureSet::AddRem => "add_rem",
            FeatureSet::Count => "count",
            FeatureSet::Hist => "hist",
            FeatureSet::All => "all",
        }
    }
}

/// Which blocks make up the final embedding.
///
/// Text form is `<text>+<streams>+<features>`, e.g. `bow+add_remove+all`.
/// The two-part form `<text>+<features>` implies added lines only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EmbeddingSpec {
    pub text_kind: TextKind,
    pub streams: Streams,
    pub feature_set: FeatureSet,
}

impl EmbeddingSpec {
    pub fn new(text_kind: TextKind, streams: Streams, feature_set: FeatureSet) -> Result<Self, EmbeddingError> {
        if text_kind == TextKind::None && feature_set == FeatureSet::None {
            return Err(EmbeddingError::InvalidSpec(
                "at least one of text kind and feature set must be set".into(),
            ));
        }
        Ok(EmbeddingSpec {
            text_kind,
            streams,
            feature_set,
        })
    }

    pub fn text_streams(&self) -> Vec<Stream> {
        match (self.text_kind, self.streams) {
            (TextKind::None, _) => vec![],
            (_, Streams::AddOnly) => vec![Stream::Add],
            (_, Streams::AddAndRemove) => vec![Stream::Add, Stream::Remove],
        }
    }
}

impl fmt::Display for EmbeddingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text = match self.text_kind {
            TextKind::None => "none",
            TextKind::Bow => "bow",
            TextKind::External => "external",
        };
        let streams = match self.streams {
            Streams::AddOnly => "add",
            Streams::AddAndRemove => "add_remove",
        };
        write!(f, "{text}+{streams}+{}", self.feature_set.as_str())
    }
}

impl FromStr for EmbeddingSpec {
    type Err = EmbeddingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |what: &str, v: &str| EmbeddingError::InvalidSpec(format!("unknown {what} `{v}` in `{s}`"));
        let parts: Vec<&str> = s.split('+').map(str::trim).collect();
        let (text, streams, features) = match parts.as_slice() {
            [t, st, f] => (*t, Some(*st), *f),
            [t, f] => (*t, None, *f),
            _ => {
                return Err(EmbeddingError::InvalidSpec(format!(
                    "expected <text>+<streams>+<features>, got `{s}`"
                )))
            }
        };
        let text_kind = match text {
            "none" | "-" => TextKind::None,
            "bow" => TextKind::Bow,
            "external" | "ext" | "llm" => TextKind::External,
            other => return Err(bad("text kind", other)),
        };
        let streams = match streams {
            None | Some("add") | Some("add_only") | Some("-") => Streams::AddOnly,
            Some("add_remove") | Some("add_and_remove") => Streams::AddAndRemove,
            Some(other) => return Err(bad("streams", other)),
        };
        let feature_set = match features {
            "none" => FeatureSet::None,
            "add_rem" => FeatureSet::AddRem,
            "count" => FeatureSet::Count,
            "hist" => FeatureSet::Hist,
            "all" => FeatureSet::All,
            other => return Err(bad("feature set", other)),
        };
        EmbeddingSpec::new(text_kind, streams, feature_set)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockTag {
    BowAdd,
    BowRem,
    ExtAdd,
    ExtRem,
    Features,
}

impl BlockTag {
    fn for_text(kind: TextKind, stream: Stream) -> Option<BlockTag> {
        match (kind, stream) {
            (TextKind::Bow, Stream::Add) => Some(BlockTag::BowAdd),
            (TextKind::Bow, Stream::Remove) => Some(BlockTag::BowRem),
            (TextKind::External, Stream::Add) => Some(BlockTag::ExtAdd),
            (TextKind::External, Stream::Remove) => Some(BlockTag::ExtRem),
            (TextKind::None, _) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockData {
    Sparse(Vec<SparseVec>),
    Dense(Vec<Vec<f64>>),
}

impl BlockData {
    fn n_rows(&self) -> usize {
        match self {
            BlockData::Sparse(r) => r.len(),
            BlockData::Dense(r) => r.len(),
        }
    }
}

/// A contiguous group of columns from one source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub tag: BlockTag,
    pub columns: Vec<String>,
    pub data: BlockData,
}

impl Block {
    pub fn width(&self) -> usize {
        self.columns.len()
    }
}

/// Bag-of-words block for one stream.
pub fn bow_block(vocab: &Vocabulary, stream: Stream, documents: &[&[String]]) -> Block {
    let tag = BlockTag::for_text(TextKind::Bow, stream).expect("bow tag");
    let prefix = if stream == Stream::Add { "bow_add" } else { "bow_rem" };
    Block {
        tag,
        columns: vocab.tokens().iter().map(|t| format!("{prefix}:{t}")).collect(),
        data: BlockData::Sparse(documents.iter().map(|d| transform_bow(vocab, d)).collect()),
    }
}

/// External-vector block for one stream. Every key must have a vector.
pub fn external_block(vectors: &ExternalVectors, stream: Stream, keys: &[FileKey]) -> Result<Block, EmbeddingError> {
    let tag = BlockTag::for_text(TextKind::External, stream).expect("external tag");
    let prefix = if stream == Stream::Add { "ext_add" } else { "ext_rem" };
    let rows = keys
        .iter()
        .map(|k| vectors.require(k, stream).map(<[f64]>::to_vec))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Block {
        tag,
        columns: (0..vectors.dim()).map(|i| format!("{prefix}:{i}")).collect(),
        data: BlockData::Dense(rows),
    })
}

/// Final per-file embeddings with their column layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMatrix {
    spec: EmbeddingSpec,
    keys: Vec<FileKey>,
    blocks: Vec<Block>,
    #[serde(skip)]
    offsets: Vec<usize>,
}

impl EmbeddingMatrix {
    fn from_blocks(spec: EmbeddingSpec, keys: Vec<FileKey>, blocks: Vec<Block>) -> Self {
        let mut m = EmbeddingMatrix {
            spec,
            keys,
            blocks,
            offsets: Vec::new(),
        };
        m.rebuild_offsets();
        m
    }

    fn rebuild_offsets(&mut self) {
        let mut acc = 0;
        self.offsets = self
            .blocks
            .iter()
            .map(|b| {
                let start = acc;
                acc += b.width();
                start
            })
            .collect();
    }

    pub fn spec(&self) -> &EmbeddingSpec {
        &self.spec
    }

    pub fn keys(&self) -> &[FileKey] {
        &self.keys
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// `(tag, first column, width)` for each block.
    pub fn block_bounds(&self) -> Vec<(BlockTag, usize, usize)> {
        self.blocks
            .iter()
            .zip(&self.offsets)
            .map(|(b, &o)| (b.tag, o, b.width()))
            .collect()
    }

    pub fn column_names(&self) -> Vec<String> {
        self.blocks.iter().flat_map(|b| b.columns.iter().cloned()).collect()
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string(self)
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        let mut m: EmbeddingMatrix = serde_json::from_str(text)?;
        m.rebuild_offsets();
        Ok(m)
    }
}

impl Rows for EmbeddingMatrix {
    fn n_rows(&self) -> usize {
        self.keys.len()
    }

    fn n_cols(&self) -> usize {
        self.blocks.iter().map(Block::width).sum()
    }

    fn value(&self, row: usize, col: usize) -> f64 {
        let b = self.offsets.partition_point(|&o| o <= col) - 1;
        let local = col - self.offsets[b];
        match &self.blocks[b].data {
            BlockData::Sparse(rows) => rows[row].get(local),
            BlockData::Dense(rows) => rows[row][local],
        }
    }

    fn dense_row(&self, row: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_cols());
        for b in &self.blocks {
            match &b.data {
                BlockData::Sparse(rows) => out.extend(rows[row].to_dense(b.width())),
                BlockData::Dense(rows) => out.extend_from_slice(&rows[row]),
            }
        }
        out
    }
}

/// Concatenates text blocks with the selected features for each key.
///
/// `text_blocks` must match `spec`: one block per text stream, add first.
/// Values are copied unchanged.
pub fn combine(
    spec: &EmbeddingSpec,
    keys: &[FileKey],
    text_blocks: Vec<Block>,
    features: &FeatureMatrix,
) -> Result<EmbeddingMatrix, EmbeddingError> {
    let expected: Vec<BlockTag> = spec
        .text_streams()
        .into_iter()
        .filter_map(|s| BlockTag::for_text(spec.text_kind, s))
        .collect();
    let got: Vec<BlockTag> = text_blocks.iter().map(|b| b.tag).collect();
    if got != expected {
        return Err(EmbeddingError::Layout(format!("expected {expected:?}, got {got:?}")));
    }
    for b in &text_blocks {
        if b.data.n_rows() != keys.len() {
            return Err(EmbeddingError::Layout(format!(
                "block {:?} has {} rows, expected {}",
                b.tag,
                b.data.n_rows(),
                keys.len()
            )));
        }
    }
    let mut blocks = text_blocks;
    let selected = spec.feature_set.indices();
    if !selected.is_empty() {
        let rows = keys
            .iter()
            .map(|k| {
                let fv = features
                    .get(k)
                    .ok_or_else(|| EmbeddingError::MissingFeatures(k.clone()))?;
                Ok(selected.iter().map(|&i| fv.values[i]).collect())
            })
            .collect::<Result<Vec<Vec<f64>>, EmbeddingError>>()?;
        blocks.push(Block {
            tag: BlockTag::Features,
            columns: selected.iter().map(|&i| FEATURE_NAMES[i].to_string()).collect(),
            data: BlockData::Dense(rows),
        });
    }
    Ok(EmbeddingMatrix::from_blocks(*spec, keys.to_vec(), blocks))
}

/// Tokenized added and removed lines of every initial-commit file.
#[derive(Debug, Clone, Default)]
pub struct Documents {
    docs: HashMap<FileKey, [Vec<String>; 2]>,
}

impl Documents {
    pub fn from_corpus(patches: &[Patch]) -> Self {
        let docs = patches
            .iter()
            .flat_map(|p| {
                p.initial_commit().files.iter().map(move |f| {
                    (
                        FileKey::new(&p.patch_id, &f.path),
                        [preprocess_code(f.added_lines()), preprocess_code(f.removed_lines())],
                    )
                })
            })
            .collect();
        Documents { docs }
    }

    pub fn get(&self, key: &FileKey, stream: Stream) -> &[String] {
        let idx = usize::from(stream == Stream::Remove);
        self.docs.get(key).map_or(&[], |d| d[idx].as_slice())
    }
}

/// Text state fitted on a training partition: one vocabulary per stream.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TextModel {
    pub add: Option<Vocabulary>,
    pub remove: Option<Vocabulary>,
}

impl TextModel {
    pub fn fit(spec: &EmbeddingSpec, docs: &Documents, train: &[FileKey]) -> Self {
        if spec.text_kind != TextKind::Bow {
            return TextModel::default();
        }
        let fit = |stream| {
            let d: Vec<&[String]> = train.iter().map(|k| docs.get(k, stream)).collect();
            fit_vocabulary(&d)
        };
        TextModel {
            add: Some(fit(Stream::Add)),
            remove: (spec.streams == Streams::AddAndRemove).then(|| fit(Stream::Remove)),
        }
    }

    pub fn reindex(self) -> Self {
        TextModel {
            add: self.add.map(Vocabulary::reindex),
            remove: self.remove.map(Vocabulary::reindex),
        }
    }
}

/// Inputs shared by every embedding built from one corpus.
pub struct EmbeddingInputs<'a> {
    pub documents: &'a Documents,
    pub features: &'a FeatureMatrix,
    pub external: Option<&'a ExternalVectors>,
}

/// Builds the embedding of `keys` under `spec` with an already fitted text
/// model.
pub fn build_embedding(
    spec: &EmbeddingSpec,
    keys: &[FileKey],
    text: &TextModel,
    inputs: &EmbeddingInputs<'_>,
) -> Result<EmbeddingMatrix, EmbeddingError> {
    let mut blocks = Vec::new();
    for stream in spec.text_streams() {
        match spec.text_kind {
            TextKind::Bow => {
                let vocab = match stream {
                    Stream::Add => text.add.as_ref(),
                    Stream::Remove => text.remove.as_ref(),
                }
                .ok_or_else(|| EmbeddingError::Layout(format!("no fitted vocabulary for {stream:?}")))?;
                let docs: Vec<&[String]> = keys.iter().map(|k| inputs.documents.get(k, stream)).collect();
                blocks.push(bow_block(vocab, stream, &docs));
            }
            TextKind::External => {
                let ext = inputs
                    .external
                    .ok_or_else(|| EmbeddingError::InvalidSpec("external text requires vectors".into()))?;
                blocks.push(external_block(ext, stream, keys)?);
            }
            TextKind::None => {}
        }
    }
    combine(spec, keys, blocks, inputs.features)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureVector;

    fn features(keys: &[FileKey]) -> FeatureMatrix {
        keys.iter()
            .enumerate()
            .map(|(i, k)| {
                let values = (0..FEATURE_COUNT).map(|j| (i * 100 + j) as f64).collect();
                (k.clone(), FeatureVector { values })
            })
            .collect()
    }

    fn sparse_block(tag: BlockTag, width: usize, rows: usize) -> Block {
        Block {
            tag,
            columns: (0..width).map(|i| format!("t{i}")).collect(),
            data: BlockData::Sparse(vec![SparseVec::default(); rows]),
        }
    }

    #[test]
    fn spec_parsing() {
        let s: EmbeddingSpec = "bow+all".parse().unwrap();
        assert_eq!(s.streams, Streams::AddOnly);
        assert_eq!(s.feature_set, FeatureSet::All);
        let s: EmbeddingSpec = "external+add_remove+hist".parse().unwrap();
        assert_eq!(s.to_string(), "external+add_remove+hist");
        assert!("none+none".parse::<EmbeddingSpec>().is_err());
        assert!("bow+sideways+all".parse::<EmbeddingSpec>().is_err());
    }

    #[test]
    fn bow_add_only_dimension() {
        let keys = vec![FileKey::new("p", "a")];
        let spec: EmbeddingSpec = "bow+add+none".parse().unwrap();
        let m = combine(
            &spec,
            &keys,
            vec![sparse_block(BlockTag::BowAdd, 5, 1)],
            &features(&keys),
        )
        .unwrap();
        assert_eq!(m.n_cols(), 5);
    }

    #[test]
    fn bow_both_streams_with_all_features() {
        let keys = vec![FileKey::new("p", "a"), FileKey::new("p", "b")];
        let spec: EmbeddingSpec = "bow+add_remove+all".parse().unwrap();
        let blocks = vec![
            sparse_block(BlockTag::BowAdd, 5, 2),
            sparse_block(BlockTag::BowRem, 3, 2),
        ];
        let m = combine(&spec, &keys, blocks, &features(&keys)).unwrap();
        assert_eq!(m.n_cols(), 45);
        assert_eq!(m.block_bounds()[2], (BlockTag::Features, 8, 37));
        assert_eq!(m.value(1, 8), 100.0);
        assert_eq!(m.value(1, 44), 136.0);
    }

    #[test]
    fn features_only_add_rem() {
        let keys = vec![FileKey::new("p", "a")];
        let spec: EmbeddingSpec = "none+add_rem".parse().unwrap();
        let m = combine(&spec, &keys, vec![], &features(&keys)).unwrap();
        assert_eq!(m.dense_row(0), vec![0.0, 1.0]);
        assert_eq!(m.column_names(), vec!["c_add", "c_rem"]);
    }

    #[test]
    fn layout_and_missing_rows_rejected() {
        let keys = vec![FileKey::new("p", "a")];
        let spec: EmbeddingSpec = "bow+add_remove+none".parse().unwrap();
        assert!(combine(
            &spec,
            &keys,
            vec![sparse_block(BlockTag::BowAdd, 5, 1)],
            &features(&keys)
        )
        .is_err());
        let spec: EmbeddingSpec = "none+all".parse().unwrap();
        assert!(matches!(
            combine(&spec, &[FileKey::new("q", "z")], vec![], &features(&keys)),
            Err(EmbeddingError::MissingFeatures(_))
        ));
    }

    #[test]
    fn external_requires_every_vector() {
        let text = "{\"patch_id\":\"p\",\"path\":\"a\",\"stream\":\"add\",\"vector\":[1.0,2.0]}\n";
        let ext = read_external_vectors(text.as_bytes(), None).unwrap();
        let keys = vec![FileKey::new("p", "a"), FileKey::new("p", "b")];
        assert!(matches!(
            external_block(&ext, Stream::Add, &keys),
            Err(EmbeddingError::MissingVector(..))
        ));
        let block = external_block(&ext, Stream::Add, &keys[..1]).unwrap();
        assert_eq!(block.width(), 2);
    }

    #[test]
    fn json_round_trip_keeps_layout() {
        let keys = vec![FileKey::new("p", "a")];
        let spec: EmbeddingSpec = "bow+add+count".parse().unwrap();
        let block = Block {
            tag: BlockTag::BowAdd,
            columns: vec!["bow_add:x".into(), "bow_add:y".into()],
            data: BlockData::Sparse(vec![SparseVec {
                indices: vec![1],
                values: vec![4.0],
            }]),
        };
        let m = combine(&spec, &keys, vec![block], &features(&keys)).unwrap();
        let back = EmbeddingMatrix::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.value(0, 1), 4.0);
        assert_eq!(back.value(0, 2), 0.0);
    }
}
