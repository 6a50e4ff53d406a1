use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EmbeddingError;
use crate::labeling::FileKey;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stream {
    Add,
    Remove,
}

#[derive(Debug, Deserialize)]
struct VectorRow {
    patch_id: String,
    path: String,
    stream: Stream,
    vector: Vec<f64>,
}

/// Precomputed dense encodings of added and removed lines, one per file
/// stream.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExternalVectors {
    dim: usize,
    vectors: BTreeMap<(FileKey, Stream), Vec<f64>>,
}

impl ExternalVectors {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, key: &FileKey, stream: Stream) -> Option<&[f64]> {
        self.vectors.get(&(key.clone(), stream)).map(Vec::as_slice)
    }

    pub fn require(&self, key: &FileKey, stream: Stream) -> Result<&[f64], EmbeddingError> {
        self.get(key, stream)
            .ok_or_else(|| EmbeddingError::MissingVector(key.clone(), stream))
    }
}

/// Reads external vectors from JSONL. With `known` set, rows for files
/// outside that set are dropped with a warning.
pub fn load_external_vectors(
    path: impl AsRef<Path>,
    known: Option<&HashSet<FileKey>>,
) -> Result<ExternalVectors, EmbeddingError> {
    read_external_vectors(BufReader::new(File::open(path)?), known)
}

pub fn read_external_vectors(
    reader: impl BufRead,
    known: Option<&HashSet<FileKey>>,
) -> Result<ExternalVectors, EmbeddingError> {
    let mut out = ExternalVectors::default();
    let mut dim: Option<usize> = None;
    let mut ignored = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with("{\"_meta\"") {
            continue;
        }
        let row: VectorRow = serde_json::from_str(trimmed).map_err(|e| EmbeddingError::Schema {
            line_no,
            reason: e.to_string(),
        })?;
        match dim {
            None => dim = Some(row.vector.len()),
            Some(d) if d != row.vector.len() => {
                return Err(EmbeddingError::DimensionMismatch {
                    line_no,
                    expected: d,
                    found: row.vector.len(),
                })
            }
            Some(_) => {}
        }
        let key = FileKey::new(row.patch_id, row.path);
        if known.is_some_and(|k| !k.contains(&key)) {
            ignored += 1;
            continue;
        }
        if out.vectors.insert((key.clone(), row.stream), row.vector).is_some() {
            return Err(EmbeddingError::Schema {
                line_no,
                reason: format!("duplicate vector for {}:{} ({:?})", key.patch_id, key.path, row.stream),
            });
        }
    }
    if ignored > 0 {
        log::warn!("ignored {ignored} external vectors for files outside the corpus");
    }
    out.dim = dim.unwrap_or(0);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(pid: &str, path: &str, stream: &str, v: &[f64]) -> String {
        format!(
            "{{\"patch_id\":\"{pid}\",\"path\":\"{path}\",\"stream\":\"{stream}\",\"vector\":{}}}\n",
            serde_json::to_string(v).unwrap()
        )
    }

    #[test]
    fn dimension_mismatch() {
        let text = row("p", "a", "add", &[0.0; 4]) + &row("p", "b", "add", &[0.0; 5]);
        assert!(matches!(
            read_external_vectors(text.as_bytes(), None),
            Err(EmbeddingError::DimensionMismatch {
                expected: 4,
                found: 5,
                ..
            })
        ));
    }

    #[test]
    fn valid_file() {
        let text = row("p", "a", "add", &[1.0, 2.0, 3.0])
            + &row("p", "a", "remove", &[0.0, 0.0, 1.0])
            + &row("p", "b", "add", &[0.5, 0.5, 0.5]);
        let v = read_external_vectors(text.as_bytes(), None).unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(v.dim(), 3);
        assert_eq!(
            v.get(&FileKey::new("p", "a"), Stream::Remove),
            Some(&[0.0, 0.0, 1.0][..])
        );
    }

    #[test]
    fn unknown_files_ignored() {
        let text = row("p", "a", "add", &[1.0]) + &row("q", "zz", "add", &[2.0]);
        let known: HashSet<_> = [FileKey::new("p", "a")].into_iter().collect();
        let v = read_external_vectors(text.as_bytes(), Some(&known)).unwrap();
        assert_eq!(v.len(), 1);
        assert!(matches!(
            v.require(&FileKey::new("p", "b"), Stream::Add),
            Err(EmbeddingError::MissingVector(..))
        ));
    }
}
