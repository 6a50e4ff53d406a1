//! Atomic artifact writing with provenance headers.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use anyhow::Context;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;

pub const TOOL: &str = "review-radar";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance stamped into every output file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub stage: String,
    pub config_sha256: String,
    pub corpus_sha256: Option<String>,
}

impl Meta {
    pub fn new(stage: &str, config_sha256: String, corpus_sha256: Option<String>) -> Self {
        Meta {
            tool: TOOL.into(),
            version: VERSION.into(),
            stage: stage.into(),
            config_sha256,
            corpus_sha256,
        }
    }

    pub fn csv_comment(&self) -> String {
        let mut s = format!(
            "# {} {} stage={} config_sha256={}",
            self.tool, self.version, self.stage, self.config_sha256
        );
        if let Some(c) = &self.corpus_sha256 {
            s.push_str(&format!(" corpus_sha256={c}"));
        }
        s.push('\n');
        s
    }

    pub fn jsonl_line(&self) -> String {
        #[derive(Serialize)]
        struct Line<'a> {
            _meta: &'a Meta,
        }
        serde_json::to_string(&Line { _meta: self }).expect("meta serializes") + "\n"
    }
}

/// A JSON document with its provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub _meta: Meta,
    pub data: T,
}

pub fn file_sha256(path: &Path) -> anyhow::Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, meta: &Meta, data: &T) -> anyhow::Result<()> {
    let env = Envelope {
        _meta: meta.clone(),
        data,
    };
    let mut bytes = serde_json::to_vec_pretty(&env)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> anyhow::Result<Envelope<T>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn write_jsonl<T: Serialize>(path: &Path, meta: &Meta, rows: &[T]) -> anyhow::Result<()> {
    let mut out = meta.jsonl_line().into_bytes();
    for r in rows {
        serde_json::to_writer(&mut out, r)?;
        out.push(b'\n');
    }
    write_atomic(path, &out)
}

/// Reads JSONL rows, skipping blank and `_meta` lines.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> anyhow::Result<Vec<T>> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || review_radar::corpus::is_meta_line(t) {
            continue;
        }
        rows.push(serde_json::from_str(t).with_context(|| format!("{}:{}", path.display(), i + 1))?);
    }
    Ok(rows)
}

/// CSV with a `#` provenance line. `rows` are already stringified.
pub fn write_csv(path: &Path, meta: &Meta, header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<()> {
    let mut buf = meta.csv_comment().into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    write_atomic(path, &buf)
}

/// Formats a float with enough digits to round-trip.
pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}
