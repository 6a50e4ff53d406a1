//! Review-corpus data model, JSONL loading and validation.
//!
//! A corpus is a chronologically ordered list of [`Patch`]es. Each patch
//! carries its initial commit, any revision commits, and the review comments
//! left on it. Loading enforces every structural invariant so downstream
//! stages can index freely.

mod diff;
mod ingest;
mod summary;

use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use diff::parse_unified_diff;
pub use ingest::{ingest_diff_directory, CommitSource, PatchSource};
pub use summary::{corpus_summary, LabelShare, SummaryReport};

/// Default number of context lines kept on each side of a change run.
pub const DEFAULT_CONTEXT_LIMIT: usize = 10;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("malformed diff at line {line_no}: {reason}")]
    MalformedDiff { line_no: usize, reason: String },
    #[error("schema error at line {line_no}, field `{field}`: {reason}")]
    SchemaError {
        line_no: usize,
        field: String,
        reason: String,
    },
    #[error("duplicate patch id `{0}`")]
    DuplicatePatchId(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CorpusError {
    fn schema(line_no: usize, field: impl Into<String>, reason: impl Into<String>) -> Self {
        CorpusError::SchemaError {
            line_no,
            field: field.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommitKind {
    Initial,
    Revision,
}

/// One contiguous run of changed lines with its surrounding context.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hunk {
    pub added: Vec<String>,
    pub removed: Vec<String>,
    pub context_before: Vec<String>,
    pub context_after: Vec<String>,
}

impl Hunk {
    pub fn unchanged_len(&self) -> usize {
        self.context_before.len() + self.context_after.len()
    }

    /// Keeps the `limit` context lines closest to the change on each side.
    pub fn truncate_context(&mut self, limit: usize) {
        if self.context_before.len() > limit {
            let drop = self.context_before.len() - limit;
            self.context_before.drain(..drop);
        }
        self.context_after.truncate(limit);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangedFile {
    pub path: String,
    pub hunks: Vec<Hunk>,
}

impl ChangedFile {
    pub fn added_count(&self) -> usize {
        self.hunks.iter().map(|h| h.added.len()).sum()
    }

    pub fn removed_count(&self) -> usize {
        self.hunks.iter().map(|h| h.removed.len()).sum()
    }

    pub fn unchanged_count(&self) -> usize {
        self.hunks.iter().map(Hunk::unchanged_len).sum()
    }

    pub fn added_lines(&self) -> impl Iterator<Item = &str> {
        self.hunks.iter().flat_map(|h| h.added.iter().map(String::as_str))
    }

    pub fn removed_lines(&self) -> impl Iterator<Item = &str> {
        self.hunks.iter().flat_map(|h| h.removed.iter().map(String::as_str))
    }

    /// Parent directory of the file: everything before the last `/`, or `""`
    /// for files at the repository root.
    pub fn directory(&self) -> &str {
        directory_of(&self.path)
    }
}

pub fn directory_of(path: &str) -> &str {
    path.rfind('/').map_or("", |i| &path[..i])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Commit {
    pub commit_id: String,
    pub kind: CommitKind,
    pub timestamp: i64,
    pub files: Vec<ChangedFile>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewComment {
    pub file_path: Option<String>,
    pub line: Option<u32>,
    pub commit_id: String,
    pub author_id: String,
    pub timestamp: i64,
}

impl ReviewComment {
    /// Comments without a file anchor apply to the patch as a whole.
    pub fn is_general(&self) -> bool {
        self.file_path.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Patch {
    pub patch_id: String,
    pub project: String,
    pub author_id: String,
    pub reviewer_ids: BTreeSet<String>,
    pub submitted_at: i64,
    pub commits: Vec<Commit>,
    pub comments: Vec<ReviewComment>,
}

impl Patch {
    /// The first commit. Validated patches always have one of kind `initial`.
    pub fn initial_commit(&self) -> &Commit {
        &self.commits[0]
    }

    pub fn revisions(&self) -> impl Iterator<Item = &Commit> {
        self.commits.iter().filter(|c| c.kind == CommitKind::Revision)
    }

    pub fn initial_file(&self, path: &str) -> Option<&ChangedFile> {
        self.initial_commit().files.iter().find(|f| f.path == path)
    }

    /// Checks every structural invariant. `line_no` is only used for error
    /// reporting.
    pub fn validate(&self, line_no: usize, context_limit: usize) -> Result<(), CorpusError> {
        let err = |field: &str, reason: String| Err(CorpusError::schema(line_no, field, reason));

        if self.patch_id.is_empty() {
            return err("patch_id", "must not be empty".into());
        }
        if self.reviewer_ids.contains(&self.author_id) {
            return err(
                "reviewer_ids",
                format!("author `{}` listed as reviewer", self.author_id),
            );
        }
        let Some(first) = self.commits.first() else {
            return err("commits", "patch has no commits".into());
        };
        if first.kind != CommitKind::Initial {
            return err("commits", "first commit must be the initial commit".into());
        }
        let initials = self.commits.iter().filter(|c| c.kind == CommitKind::Initial).count();
        if initials != 1 {
            return err("commits", format!("expected 1 initial commit, found {initials}"));
        }
        if first.timestamp != self.submitted_at {
            return err(
                "submitted_at",
                format!(
                    "initial commit timestamp {} differs from submitted_at {}",
                    first.timestamp, self.submitted_at
                ),
            );
        }
        for pair in self.commits.windows(2) {
            if pair[1].timestamp < pair[0].timestamp {
                return err(
                    "commits.timestamp",
                    format!("commit `{}` is older than its predecessor", pair[1].commit_id),
                );
            }
        }
        for commit in &self.commits {
            if commit.files.is_empty() {
                return err("commits.files", format!("commit `{}` has no files", commit.commit_id));
            }
            let mut seen = HashSet::new();
            for file in &commit.files {
                if !seen.insert(file.path.as_str()) {
                    return err(
                        "files.path",
                        format!("path `{}` repeated in commit `{}`", file.path, commit.commit_id),
                    );
                }
                if file.hunks.is_empty() {
                    return err("files.hunks", format!("file `{}` has no hunks", file.path));
                }
                for hunk in &file.hunks {
                    if hunk.added.is_empty() && hunk.removed.is_empty() {
                        return err("hunks", format!("file `{}` has a hunk without changes", file.path));
                    }
                    if hunk.context_before.len() > context_limit || hunk.context_after.len() > context_limit {
                        return err(
                            "hunks.context",
                            format!("file `{}` exceeds context limit {context_limit}", file.path),
                        );
                    }
                }
            }
        }
        for comment in &self.comments {
            if comment.line.is_some() && comment.file_path.is_none() {
                return err("comments.line", "line given without file_path".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadOptions {
    pub context_limit: usize,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            context_limit: DEFAULT_CONTEXT_LIMIT,
        }
    }
}

/// Loads a JSONL corpus with the default context limit.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<Patch>, CorpusError> {
    load_corpus_with(path, LoadOptions::default())
}

pub fn load_corpus_with(path: impl AsRef<Path>, options: LoadOptions) -> Result<Vec<Patch>, CorpusError> {
    let file = File::open(path)?;
    read_corpus(BufReader::new(file), options)
}

/// Parses a JSONL corpus from any reader. Blank lines and lines carrying a
/// top-level `_meta` key are skipped. Context is truncated to the configured
/// limit before validation.
pub fn read_corpus(reader: impl BufRead, options: LoadOptions) -> Result<Vec<Patch>, CorpusError> {
    let mut patches = Vec::new();
    let mut ids = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || is_meta_line(trimmed) {
            continue;
        }
        let mut patch: Patch =
            serde_json::from_str(trimmed).map_err(|e| CorpusError::schema(line_no, field_hint(&e), e.to_string()))?;
        for commit in &mut patch.commits {
            for file in &mut commit.files {
                for hunk in &mut file.hunks {
                    hunk.truncate_context(options.context_limit);
                }
            }
        }
        patch.validate(line_no, options.context_limit)?;
        if !ids.insert(patch.patch_id.clone()) {
            return Err(CorpusError::DuplicatePatchId(patch.patch_id));
        }
        patches.push(patch);
    }
    sort_chronologically(&mut patches);
    Ok(patches)
}

/// Corpus order: `submitted_at` ascending, ties by `patch_id`.
pub fn sort_chronologically(patches: &mut [Patch]) {
    patches.sort_by(|a, b| {
        a.submitted_at
            .cmp(&b.submitted_at)
            .then_with(|| a.patch_id.cmp(&b.patch_id))
    });
}

pub fn write_corpus(mut writer: impl Write, patches: &[Patch]) -> Result<(), CorpusError> {
    for patch in patches {
        serde_json::to_writer(&mut writer, patch).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Provenance header lines written ahead of JSONL records.
pub fn is_meta_line(line: &str) -> bool {
    line.starts_with("{\"_meta\"")
}

fn field_hint(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    msg.split('`')
        .nth(1)
        .filter(|_| msg.contains("field"))
        .unwrap_or("<json>")
        .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(patch_id: &str, ts: i64) -> String {
        format!(
            r#"{{"patch_id":"{patch_id}","project":"p","author_id":"a","reviewer_ids":["r"],"submitted_at":{ts},"commits":[{{"commit_id":"c{patch_id}","kind":"initial","timestamp":{ts},"files":[{{"path":"f.c","hunks":[{{"added":["x"],"removed":[],"context_before":[],"context_after":[]}}]}}]}}],"comments":[]}}"#
        )
    }

    fn read(text: &str) -> Result<Vec<Patch>, CorpusError> {
        read_corpus(text.as_bytes(), LoadOptions::default())
    }

    #[test]
    fn sorts_by_timestamp() {
        let text = format!("{}\n{}\n", line("b", 200), line("a", 100));
        let patches = read(&text).unwrap();
        let times: Vec<_> = patches.iter().map(|p| p.submitted_at).collect();
        assert_eq!(times, vec![100, 200]);
    }

    #[test]
    fn ties_broken_by_patch_id() {
        let text = format!("{}\n{}\n", line("z", 5), line("m", 5));
        let ids: Vec<_> = read(&text).unwrap().into_iter().map(|p| p.patch_id).collect();
        assert_eq!(ids, vec!["m", "z"]);
    }

    #[test]
    fn zero_commits_is_schema_error() {
        let text = r#"{"patch_id":"x","project":"p","author_id":"a","reviewer_ids":[],"submitted_at":1,"commits":[],"comments":[]}"#;
        match read(text) {
            Err(CorpusError::SchemaError { line_no, field, .. }) => {
                assert_eq!(line_no, 1);
                assert_eq!(field, "commits");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_ids_rejected() {
        let text = format!("{}\n{}\n", line("a", 1), line("a", 2));
        assert!(matches!(read(&text), Err(CorpusError::DuplicatePatchId(id)) if id == "a"));
    }

    #[test]
    fn missing_field_reports_name() {
        let text = r#"{"patch_id":"x","project":"p","reviewer_ids":[],"submitted_at":1,"commits":[],"comments":[]}"#;
        match read(text) {
            Err(CorpusError::SchemaError { field, .. }) => assert_eq!(field, "author_id"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn author_as_reviewer_rejected() {
        let text = line("a", 1).replace(r#"["r"]"#, r#"["a"]"#);
        assert!(matches!(read(&text), Err(CorpusError::SchemaError { field, .. }) if field == "reviewer_ids"));
    }

    #[test]
    fn pure_context_hunk_rejected() {
        let text = line("a", 1).replace(r#""added":["x"]"#, r#""added":[]"#);
        assert!(read(&text).is_err());
    }

    #[test]
    fn context_truncated_to_limit() {
        let text = line("a", 1).replace(
            r#""context_before":[]"#,
            r#""context_before":["1","2","3","4","5","6"]"#,
        );
        let patches = read_corpus(text.as_bytes(), LoadOptions { context_limit: 5 }).unwrap();
        let hunk = &patches[0].commits[0].files[0].hunks[0];
        assert_eq!(hunk.context_before, vec!["2", "3", "4", "5", "6"]);
    }

    #[test]
    fn comment_line_requires_path() {
        let text = line("a", 1).replace(
            r#""comments":[]"#,
            r#""comments":[{"file_path":null,"line":3,"commit_id":"ca","author_id":"r","timestamp":2}]"#,
        );
        assert!(read(&text).is_err());
    }

    #[test]
    fn initial_must_come_first_and_match_submission() {
        let text = line("a", 1).replace(r#""submitted_at":1"#, r#""submitted_at":0"#);
        assert!(read(&text).is_err());
        let text = line("a", 1).replace(r#""kind":"initial""#, r#""kind":"revision""#);
        assert!(read(&text).is_err());
    }

    #[test]
    fn directory_of_root_file_is_empty() {
        assert_eq!(directory_of("main.c"), "");
        assert_eq!(directory_of("src/util/x.rs"), "src/util");
    }
}
