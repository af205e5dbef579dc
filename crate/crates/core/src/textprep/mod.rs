//! Text cleanup stages between ingestion and alignment: normalization,
//! language identification, sentence splitting and deduplication.

pub mod dedup;
pub mod langid;
pub mod minhash;
pub mod split;

use std::io::{self, BufRead, Write};

use unicode_normalization::UnicodeNormalization;
use xxhash_rust::xxh3::xxh3_64;

use crate::ingest::collapse_whitespace;
use crate::lang::Lang;

pub use dedup::{dedup_exact, dedup_near, DedupError, ExactDeduper, NearDeduper};
pub use langid::{detect_language, LangIdError, LangPrediction, LangProfile, Script};
pub use split::{split_sentences, split_text};

/// Ethiopic word separator (፡).
pub const ETHIOPIC_WORDSPACE: char = '\u{1361}';

/// NFC, control characters other than newline removed, whitespace runs
/// collapsed (a run containing a newline becomes one newline), trimmed.
pub fn normalize(text: &str) -> String {
    let composed: String = text
        .nfc()
        .filter(|c| !c.is_control() || c.is_whitespace())
        .collect();
    collapse_whitespace(&composed)
}

/// [`normalize`] flattened to one line; the form sentences are stored in.
pub fn normalize_line(text: &str) -> String {
    normalize(text).replace('\n', " ")
}

pub fn content_hash(normalized: &str) -> u64 {
    xxh3_64(normalized.as_bytes())
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Sentence {
    pub doc_id: String,
    pub index: usize,
    pub text: String,
    pub lang: Lang,
    pub content_hash: u64,
}

impl Sentence {
    /// Normalizes `text`; returns `None` when nothing is left.
    pub fn new(doc_id: impl Into<String>, index: usize, text: &str, lang: Lang) -> Option<Self> {
        let text = normalize_line(text);
        if text.is_empty() {
            return None;
        }
        Some(Self {
            doc_id: doc_id.into(),
            index,
            content_hash: content_hash(&text),
            text,
            lang,
        })
    }

    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SentenceFileError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("sentence file line {line}: {message}")]
    Malformed { line: usize, message: String },
}

/// Tab-separated `doc_id, index, lang, text`.
pub fn write_sentences_tsv<W: Write>(mut w: W, sentences: &[Sentence]) -> io::Result<()> {
    for s in sentences {
        writeln!(w, "{}\t{}\t{}\t{}", s.doc_id, s.index, s.lang, s.text)?;
    }
    Ok(())
}

pub fn read_sentences_tsv<R: BufRead>(r: R) -> Result<Vec<Sentence>, SentenceFileError> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let malformed = |message: String| SentenceFileError::Malformed { line: n + 1, message };
        let cols: Vec<&str> = line.splitn(4, '\t').collect();
        let [doc_id, index, lang, text] = cols[..] else {
            return Err(malformed(format!("expected 4 columns, found {}", cols.len())));
        };
        let index = index.parse().map_err(|e| malformed(format!("index: {e}")))?;
        let lang = lang.parse().map_err(|e| malformed(format!("{e}")))?;
        let s = Sentence::new(doc_id, index, text, lang)
            .ok_or_else(|| malformed("empty sentence text".into()))?;
        out.push(s);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whitespace_collapses() {
        assert_eq!(normalize("  a\t b "), "a b");
    }

    #[test]
    fn ethiopic_separator_survives() {
        assert_eq!(normalize("ሰላም፡ዓለም"), "ሰላም፡ዓለም");
    }

    #[test]
    fn control_characters_removed() {
        assert_eq!(normalize("be\u{0007}ll"), "bell");
        assert_eq!(normalize("a\u{0000}b\u{001b}c"), "abc");
    }

    #[test]
    fn newlines_survive_as_single_breaks() {
        assert_eq!(normalize("one \n\n  two\r\nthree"), "one\ntwo\nthree");
        assert_eq!(normalize_line("one\ntwo"), "one two");
    }

    #[test]
    fn composes_to_nfc() {
        assert_eq!(normalize("e\u{0301}"), "\u{00e9}");
    }

    #[test]
    fn sentence_hash_is_pure() {
        let a = Sentence::new("d1", 0, " same  text ", Lang::En).unwrap();
        let b = Sentence::new("d2", 7, "same text", Lang::Am).unwrap();
        assert_eq!(a.content_hash, b.content_hash);
        assert!(Sentence::new("d", 0, " \t ", Lang::En).is_none());
    }

    #[test]
    fn tsv_round_trip() {
        let sentences = vec![
            Sentence::new("d1", 0, "Hello there.", Lang::En).unwrap(),
            Sentence::new("d1", 3, "ሰላም።", Lang::Am).unwrap(),
        ];
        let mut buf = Vec::new();
        write_sentences_tsv(&mut buf, &sentences).unwrap();
        assert_eq!(read_sentences_tsv(&buf[..]).unwrap(), sentences);
        assert!(read_sentences_tsv(&b"d1\tx\ten\ttext\n"[..]).is_err());
    }
}
