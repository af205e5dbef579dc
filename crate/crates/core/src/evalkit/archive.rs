//! Line-delimited JSON archive: a manifest line, then items, sessions and
//! scores in that order.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{BlindSession, EvalItem, ScoreRecord};

pub const ARCHIVE_VERSION: u32 = 1;
const FORMAT: &str = "corpusforge-eval";

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalDataset {
    pub items: Vec<EvalItem>,
    pub sessions: Vec<BlindSession>,
    /// Every submitted score in submission order.
    pub scores: Vec<ScoreRecord>,
}

#[derive(Debug, thiserror::Error)]
pub enum ArchiveError {
    #[error("archive is empty: missing manifest")]
    MissingManifest,
    #[error("unsupported version {0} (expected {ARCHIVE_VERSION})")]
    UnsupportedVersion(u32),
    #[error("not an evaluation archive (format '{0}')")]
    Format(String),
    #[error("truncated archive: section '{section}' has {found} of {expected} records")]
    Truncated {
        section: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: expected a record of section '{section}'")]
    Unexpected { line: usize, section: &'static str },
    #[error("line {line}: records beyond the manifest counts")]
    TrailingData { line: usize },
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    items: usize,
    sessions: usize,
    scores: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Record {
    Item(EvalItem),
    Session(BlindSession),
    Score(ScoreRecord),
}

#[derive(Serialize)]
#[serde(rename_all = "lowercase")]
enum RecordRef<'a> {
    Item(&'a EvalItem),
    Session(&'a BlindSession),
    Score(&'a ScoreRecord),
}

pub fn export_eval_dataset<W: Write>(ds: &EvalDataset, mut w: W) -> io::Result<()> {
    let manifest = Manifest {
        format: FORMAT.into(),
        version: ARCHIVE_VERSION,
        items: ds.items.len(),
        sessions: ds.sessions.len(),
        scores: ds.scores.len(),
    };
    write_line(&mut w, &manifest)?;
    for i in &ds.items {
        write_line(&mut w, &RecordRef::Item(i))?;
    }
    for s in &ds.sessions {
        write_line(&mut w, &RecordRef::Session(s))?;
    }
    for s in &ds.scores {
        write_line(&mut w, &RecordRef::Score(s))?;
    }
    Ok(())
}

fn write_line<W: Write, T: Serialize>(w: &mut W, v: &T) -> io::Result<()> {
    serde_json::to_writer(&mut *w, v)?;
    w.write_all(b"\n")
}

pub fn import_eval_dataset<R: BufRead>(r: R) -> Result<EvalDataset, ArchiveError> {
    let mut lines = r.lines().enumerate().filter(|(_, l)| !matches!(l, Ok(l) if l.trim().is_empty()));
    let (_, first) = lines.next().ok_or(ArchiveError::MissingManifest)?;
    let value: serde_json::Value = serde_json::from_str(&first?).map_err(|source| ArchiveError::Json { line: 1, source })?;
    if let Some(v) = value.get("version").and_then(|v| v.as_u64()) {
        if v != ARCHIVE_VERSION as u64 {
            return Err(ArchiveError::UnsupportedVersion(v.min(u32::MAX as u64) as u32));
        }
    }
    let manifest: Manifest = serde_json::from_value(value).map_err(|source| ArchiveError::Json { line: 1, source })?;
    if manifest.format != FORMAT {
        return Err(ArchiveError::Format(manifest.format));
    }
    let mut ds = EvalDataset::default();
    let sections: [(&'static str, usize); 3] = [
        ("items", manifest.items),
        ("sessions", manifest.sessions),
        ("scores", manifest.scores),
    ];
    for (section, expected) in sections {
        for found in 0..expected {
            let Some((n, line)) = lines.next() else {
                return Err(ArchiveError::Truncated { section, expected, found });
            };
            let record: Record =
                serde_json::from_str(&line?).map_err(|source| ArchiveError::Json { line: n + 1, source })?;
            match (section, record) {
                ("items", Record::Item(i)) => ds.items.push(i),
                ("sessions", Record::Session(s)) => ds.sessions.push(s),
                ("scores", Record::Score(s)) => ds.scores.push(s),
                _ => return Err(ArchiveError::Unexpected { line: n + 1, section }),
            }
        }
    }
    if let Some((n, _)) = lines.next() {
        return Err(ArchiveError::TrailingData { line: n + 1 });
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn export(ds: &EvalDataset) -> Vec<u8> {
        let mut buf = Vec::new();
        export_eval_dataset(ds, &mut buf).unwrap();
        buf
    }

    #[test]
    fn empty_round_trip() {
        let buf = export(&EvalDataset::default());
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "{\"format\":\"corpusforge-eval\",\"version\":1,\"items\":0,\"sessions\":0,\"scores\":0}\n"
        );
        assert_eq!(import_eval_dataset(&buf[..]).unwrap(), EvalDataset::default());
    }

    #[test]
    fn version_gate() {
        let bad = b"{\"format\":\"corpusforge-eval\",\"version\":99,\"items\":0,\"sessions\":0,\"scores\":0}\n";
        let err = import_eval_dataset(&bad[..]).unwrap_err();
        assert!(err.to_string().contains("unsupported version"), "{err}");
    }

    #[test]
    fn truncation_names_section() {
        let manifest = b"{\"format\":\"corpusforge-eval\",\"version\":1,\"items\":0,\"sessions\":2,\"scores\":0}\n";
        let err = import_eval_dataset(&manifest[..]).unwrap_err();
        assert!(matches!(err, ArchiveError::Truncated { section: "sessions", expected: 2, found: 0 }));
        assert!(matches!(import_eval_dataset(&b""[..]), Err(ArchiveError::MissingManifest)));
    }
}
