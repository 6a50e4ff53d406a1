//! File-level review-activity labels for initial-commit files.
//!
//! - `commented`: some review comment is anchored to the file, either on a
//!   line or on the file as a whole. General patch comments label nothing.
//! - `revised`: a later revision commit of the same patch touches the path.
//! - `hot_spot`: commented or revised.
//!
//! Files that first appear in a revision get no label row.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Patch;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LabelError {
    #[error("file `{path}` is not part of the initial commit of patch `{patch_id}`")]
    UnknownFile { patch_id: String, path: String },
    #[error("unknown label `{0}` (expected commented, revised or hot_spot)")]
    UnknownLabel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Commented,
    Revised,
    HotSpot,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Commented, Label::Revised, Label::HotSpot];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Commented => "commented",
            Label::Revised => "revised",
            Label::HotSpot => "hot_spot",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = LabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "commented" => Ok(Label::Commented),
            "revised" => Ok(Label::Revised),
            "hot_spot" | "hotspot" | "hot-spot" => Ok(Label::HotSpot),
            other => Err(LabelError::UnknownLabel(other.to_string())),
        }
    }
}

/// Which comments may mark a file as commented.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommentsScope {
    /// Comments attached to any commit of the patch.
    #[default]
    Any,
    /// Only comments attached to the initial commit.
    Initial,
}

/// Identity of one prediction row.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FileKey {
    pub patch_id: String,
    pub path: String,
}

impl FileKey {
    pub fn new(patch_id: impl Into<String>, path: impl Into<String>) -> Self {
        FileKey {
            patch_id: patch_id.into(),
            path: path.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileLabels {
    pub commented: bool,
    pub revised: bool,
    pub hot_spot: bool,
}

impl FileLabels {
    pub fn new(commented: bool, revised: bool) -> Self {
        FileLabels {
            commented,
            revised,
            hot_spot: commented || revised,
        }
    }

    pub fn get(&self, label: Label) -> bool {
        match label {
            Label::Commented => self.commented,
            Label::Revised => self.revised,
            Label::HotSpot => self.hot_spot,
        }
    }
}

fn check_initial(patch: &Patch, path: &str) -> Result<(), LabelError> {
    if patch.initial_file(path).is_none() {
        return Err(LabelError::UnknownFile {
            patch_id: patch.patch_id.clone(),
            path: path.to_string(),
        });
    }
    Ok(())
}

pub fn label_commented(patch: &Patch, path: &str, scope: CommentsScope) -> Result<bool, LabelError> {
    check_initial(patch, path)?;
    let initial_id = &patch.initial_commit().commit_id;
    Ok(patch
        .comments
        .iter()
        .any(|c| c.file_path.as_deref() == Some(path) && (scope == CommentsScope::Any || &c.commit_id == initial_id)))
}

pub fn label_revised(patch: &Patch, path: &str) -> Result<bool, LabelError> {
    check_initial(patch, path)?;
    Ok(patch.revisions().any(|c| c.files.iter().any(|f| f.path == path)))
}

/// Labels of every initial-commit file, in corpus order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelTable {
    rows: IndexMap<FileKey, FileLabels>,
    by_patch: HashMap<String, Range<usize>>,
}

impl LabelTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, key: &FileKey) -> Option<&FileLabels> {
        self.rows.get(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FileKey, &FileLabels)> {
        self.rows.iter()
    }

    pub fn keys(&self) -> impl Iterator<Item = &FileKey> {
        self.rows.keys()
    }

    /// Rows of one patch as `(path, labels)`, in initial-commit file order.
    pub fn rows_of<'a>(&'a self, patch_id: &str) -> impl Iterator<Item = (&'a str, &'a FileLabels)> + 'a {
        let range = self.by_patch.get(patch_id).cloned().unwrap_or(0..0);
        self.rows[range].iter().map(|(k, l)| (k.path.as_str(), l))
    }

    pub fn count(&self, label: Label) -> usize {
        self.rows.values().filter(|l| l.get(label)).count()
    }
}

fn label_patch(patch: &Patch, scope: CommentsScope) -> Vec<(FileKey, FileLabels)> {
    let initial_id = &patch.initial_commit().commit_id;
    let commented: HashSet<&str> = patch
        .comments
        .iter()
        .filter(|c| scope == CommentsScope::Any || &c.commit_id == initial_id)
        .filter_map(|c| c.file_path.as_deref())
        .collect();
    let revised: HashSet<&str> = patch
        .revisions()
        .flat_map(|c| c.files.iter().map(|f| f.path.as_str()))
        .collect();
    patch
        .initial_commit()
        .files
        .iter()
        .map(|f| {
            let p = f.path.as_str();
            (
                FileKey::new(&patch.patch_id, p),
                FileLabels::new(commented.contains(p), revised.contains(p)),
            )
        })
        .collect()
}

pub fn label_all(patches: &[Patch], scope: CommentsScope) -> LabelTable {
    let mut table = LabelTable::default();
    for patch in patches {
        let start = table.rows.len();
        for (key, labels) in label_patch(patch, scope) {
            table.rows.insert(key, labels);
        }
        table.by_patch.insert(patch.patch_id.clone(), start..table.rows.len());
    }
    table
}
