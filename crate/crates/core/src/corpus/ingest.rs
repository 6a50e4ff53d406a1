//! Alternative ingestion: raw unified-diff files plus a metadata JSONL.
//!
//! Each metadata line mirrors the corpus schema, except that commits name a
//! diff file (relative to the diff directory) instead of carrying files.

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    diff::parse_unified_diff, is_meta_line, sort_chronologically, Commit, CommitKind, CorpusError, Patch, ReviewComment,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CommitSource {
    pub commit_id: String,
    pub kind: CommitKind,
    pub timestamp: i64,
    pub diff: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatchSource {
    pub patch_id: String,
    pub project: String,
    pub author_id: String,
    pub reviewer_ids: BTreeSet<String>,
    pub submitted_at: i64,
    pub commits: Vec<CommitSource>,
    #[serde(default)]
    pub comments: Vec<ReviewComment>,
}

pub fn ingest_diff_directory(
    diff_dir: impl AsRef<Path>,
    metadata: impl AsRef<Path>,
    context_limit: usize,
) -> Result<Vec<Patch>, CorpusError> {
    let diff_dir = diff_dir.as_ref();
    let reader = BufReader::new(fs::File::open(metadata)?);
    let mut patches = Vec::new();
    let mut ids = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || is_meta_line(trimmed) {
            continue;
        }
        let source: PatchSource = serde_json::from_str(trimmed).map_err(|e| CorpusError::SchemaError {
            line_no,
            field: "<json>".into(),
            reason: e.to_string(),
        })?;
        let mut commits = Vec::with_capacity(source.commits.len());
        for c in source.commits {
            let text = fs::read_to_string(diff_dir.join(&c.diff))?;
            let files = parse_unified_diff(&text, context_limit).map_err(|e| match e {
                CorpusError::MalformedDiff { line_no: l, reason } => CorpusError::MalformedDiff {
                    line_no: l,
                    reason: format!("{}: {reason}", c.diff),
                },
                other => other,
            })?;
            commits.push(Commit {
                commit_id: c.commit_id,
                kind: c.kind,
                timestamp: c.timestamp,
                files,
            });
        }
        let patch = Patch {
            patch_id: source.patch_id,
            project: source.project,
            author_id: source.author_id,
            reviewer_ids: source.reviewer_ids,
            submitted_at: source.submitted_at,
            commits,
            comments: source.comments,
        };
        patch.validate(line_no, context_limit)?;
        if !ids.insert(patch.patch_id.clone()) {
            return Err(CorpusError::DuplicatePatchId(patch.patch_id));
        }
        patches.push(patch);
    }
    sort_chronologically(&mut patches);
    Ok(patches)
}
