//! Unified-diff parsing into the per-hunk corpus model.
//!
//! A unified-diff hunk may hold several change runs separated by context.
//! Each run becomes its own [`Hunk`]. Context lines between two runs are
//! shared out so that no line is counted twice: the first `context_limit`
//! lines trail the earlier run, the rest lead into the later one.

use super::{ChangedFile, CorpusError, Hunk};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LineKind {
    Context,
    Added,
    Removed,
}

struct HunkHeader {
    old_count: usize,
    new_count: usize,
}

fn malformed(line_no: usize, reason: impl Into<String>) -> CorpusError {
    CorpusError::MalformedDiff {
        line_no,
        reason: reason.into(),
    }
}

/// Parses `@@ -a[,b] +c[,d] @@ ...`. Omitted counts default to 1.
fn parse_hunk_header(line: &str, line_no: usize) -> Result<HunkHeader, CorpusError> {
    let rest = line
        .strip_prefix("@@ ")
        .ok_or_else(|| malformed(line_no, "hunk header must start with `@@ `"))?;
    let end = rest
        .find(" @@")
        .ok_or_else(|| malformed(line_no, "unterminated hunk header"))?;
    let mut ranges = rest[..end].split_whitespace();
    let old = ranges
        .next()
        .and_then(|r| r.strip_prefix('-'))
        .ok_or_else(|| malformed(line_no, "missing old range"))?;
    let new = ranges
        .next()
        .and_then(|r| r.strip_prefix('+'))
        .ok_or_else(|| malformed(line_no, "missing new range"))?;
    if ranges.next().is_some() {
        return Err(malformed(line_no, "unexpected token in hunk header"));
    }
    let count = |range: &str| -> Result<usize, CorpusError> {
        let mut parts = range.splitn(2, ',');
        let start = parts.next().unwrap_or_default();
        start
            .parse::<usize>()
            .map_err(|_| malformed(line_no, format!("bad range start `{start}`")))?;
        match parts.next() {
            Some(n) => n
                .parse::<usize>()
                .map_err(|_| malformed(line_no, format!("bad range count `{n}`"))),
            None => Ok(1),
        }
    };
    Ok(HunkHeader {
        old_count: count(old)?,
        new_count: count(new)?,
    })
}

fn strip_path(raw: &str, prefix: &str) -> String {
    let raw = raw.split('\t').next().unwrap_or(raw).trim_end();
    raw.strip_prefix(prefix).unwrap_or(raw).to_string()
}

/// Splits one unified-diff hunk body into change-run hunks.
fn split_runs(body: &[(LineKind, String)], context_limit: usize, line_no: usize) -> Result<Vec<Hunk>, CorpusError> {
    // Alternating segments: context, run, context, run, ..., context.
    let mut contexts: Vec<Vec<String>> = vec![Vec::new()];
    let mut runs: Vec<Hunk> = Vec::new();
    let mut in_run = false;
    for (kind, text) in body {
        match kind {
            LineKind::Context => {
                if in_run {
                    contexts.push(Vec::new());
                    in_run = false;
                }
                contexts.last_mut().unwrap().push(text.clone());
            }
            LineKind::Added | LineKind::Removed => {
                if !in_run {
                    runs.push(Hunk::default());
                    in_run = true;
                }
                let run = runs.last_mut().unwrap();
                if *kind == LineKind::Added {
                    run.added.push(text.clone());
                } else {
                    run.removed.push(text.clone());
                }
            }
        }
    }
    if runs.is_empty() {
        return Err(malformed(line_no, "hunk contains no added or removed lines"));
    }
    if contexts.len() == runs.len() {
        contexts.push(Vec::new());
    }
    let n = runs.len();
    let mut carry: Vec<String> = std::mem::take(&mut contexts[0]);
    for (i, run) in runs.iter_mut().enumerate() {
        run.context_before = std::mem::take(&mut carry);
        let mut following = std::mem::take(&mut contexts[i + 1]);
        if i + 1 < n {
            let split = following.len().min(context_limit);
            carry = following.split_off(split);
        }
        run.context_after = following;
        run.truncate_context(context_limit);
    }
    Ok(runs)
}

#[derive(Default)]
struct Section {
    old_path: Option<String>,
    new_path: Option<String>,
    hunks: Vec<Hunk>,
}

impl Section {
    fn path(&self) -> Option<String> {
        match self.new_path.as_deref() {
            Some("/dev/null") | None => self.old_path.clone().filter(|p| p != "/dev/null"),
            Some(p) => Some(p.to_string()),
        }
    }
}

fn finish(section: Section, files: &mut Vec<ChangedFile>) {
    if section.hunks.is_empty() {
        return;
    }
    let Some(path) = section.path() else {
        return;
    };
    match files.iter_mut().find(|f| f.path == path) {
        Some(existing) => existing.hunks.extend(section.hunks),
        None => files.push(ChangedFile {
            path,
            hunks: section.hunks,
        }),
    }
}

/// Parses a unified diff into one [`ChangedFile`] per file section.
///
/// File sections without hunks (binary files, mode-only changes) are
/// skipped. Deleted files are reported under their old path.
pub fn parse_unified_diff(text: &str, context_limit: usize) -> Result<Vec<ChangedFile>, CorpusError> {
    let lines: Vec<&str> = text.lines().collect();
    let mut files = Vec::new();
    let mut section: Option<Section> = None;
    let mut i = 0;
    while i < lines.len() {
        let line = lines[i];
        let line_no = i + 1;
        if let Some(rest) = line.strip_prefix("diff --git ") {
            if let Some(done) = section.take() {
                finish(done, &mut files);
            }
            let mut s = Section::default();
            if let Some(b) = rest.split(" b/").nth(1) {
                s.new_path = Some(b.to_string());
            }
            section = Some(s);
            i += 1;
        } else if line.starts_with("--- ") && lines.get(i + 1).is_some_and(|l| l.starts_with("+++ ")) {
            let fresh = match &section {
                Some(s) => !s.hunks.is_empty(),
                None => true,
            };
            if fresh {
                if let Some(done) = section.take() {
                    finish(done, &mut files);
                }
                section = Some(Section::default());
            }
            let s = section.as_mut().unwrap();
            s.old_path = Some(strip_path(&line[4..], "a/"));
            s.new_path = Some(strip_path(&lines[i + 1][4..], "b/"));
            i += 2;
        } else if line.starts_with("@@") {
            let header = parse_hunk_header(line, line_no)?;
            let s = section
                .as_mut()
                .filter(|s| s.new_path.is_some() || s.old_path.is_some())
                .ok_or_else(|| malformed(line_no, "hunk before any file header"))?;
            let (mut old_left, mut new_left) = (header.old_count, header.new_count);
            let mut body = Vec::new();
            i += 1;
            while old_left > 0 || new_left > 0 {
                let Some(&raw) = lines.get(i) else {
                    return Err(malformed(
                        line_no,
                        format!("hunk ended early: {old_left} old and {new_left} new lines missing"),
                    ));
                };
                let next_is_new_file = raw.starts_with("--- ")
                    && lines.get(i + 1).is_some_and(|l| l.starts_with("+++ "))
                    || raw.starts_with("diff --git ");
                if next_is_new_file {
                    return Err(malformed(
                        line_no,
                        format!("hunk ended early: {old_left} old and {new_left} new lines missing"),
                    ));
                }
                let (kind, content) = match raw.as_bytes().first() {
                    Some(b' ') => (LineKind::Context, &raw[1..]),
                    None => (LineKind::Context, ""),
                    Some(b'+') => (LineKind::Added, &raw[1..]),
                    Some(b'-') => (LineKind::Removed, &raw[1..]),
                    Some(b'\\') => {
                        i += 1;
                        continue;
                    }
                    _ => {
                        return Err(malformed(
                            i + 1,
                            format!("unexpected line inside hunk: {old_left} old and {new_left} new lines missing"),
                        ))
                    }
                };
                let (needs_old, needs_new) = match kind {
                    LineKind::Context => (true, true),
                    LineKind::Removed => (true, false),
                    LineKind::Added => (false, true),
                };
                if (needs_old && old_left == 0) || (needs_new && new_left == 0) {
                    return Err(malformed(i + 1, "hunk body exceeds the counts in its header"));
                }
                old_left -= usize::from(needs_old);
                new_left -= usize::from(needs_new);
                body.push((kind, content.to_string()));
                i += 1;
            }
            s.hunks.extend(split_runs(&body, context_limit, line_no)?);
        } else {
            i += 1;
        }
    }
    if let Some(done) = section.take() {
        finish(done, &mut files);
    }
    Ok(files)
}
