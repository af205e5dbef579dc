//! Back-translation: synthetic source sentences for monolingual target text,
//! and merging them with real pairs under a ratio cap.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Write};
use std::process::{Command, Stdio};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lang::Lang;
use crate::lexmodel::{translate_text, LexTable, Origin, SentencePair};
use crate::textprep::Sentence;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TranslateError {
    #[error("translator handles {expected_src}->{expected_tgt}, asked for {src}->{tgt}")]
    Direction {
        expected_src: Lang,
        expected_tgt: Lang,
        src: Lang,
        tgt: Lang,
    },
    #[error("empty translation")]
    Empty,
    #[error("external translator: {0}")]
    External(String),
}

pub trait Translator: Send + Sync {
    fn translate(&self, text: &str, src: Lang, tgt: Lang) -> Result<String, TranslateError>;

    fn translate_batch(&self, texts: &[&str], src: Lang, tgt: Lang) -> Vec<Result<String, TranslateError>> {
        texts.par_iter().map(|t| self.translate(t, src, tgt)).collect()
    }
}

/// Word-by-word argmax over a lexical table.
#[derive(Debug, Clone)]
pub struct NaiveTranslator {
    table: LexTable,
}

impl NaiveTranslator {
    pub fn new(table: LexTable) -> Self {
        Self { table }
    }
}

impl Translator for NaiveTranslator {
    fn translate(&self, text: &str, src: Lang, tgt: Lang) -> Result<String, TranslateError> {
        if src != self.table.src_lang || tgt != self.table.tgt_lang {
            return Err(TranslateError::Direction {
                expected_src: self.table.src_lang,
                expected_tgt: self.table.tgt_lang,
                src,
                tgt,
            });
        }
        let out = translate_text(text, &self.table);
        if out.is_empty() {
            return Err(TranslateError::Empty);
        }
        Ok(out)
    }
}

/// Runs a command once per batch: sentences go to its stdin one per line,
/// translations come back on stdout one per line. The languages are passed
/// as the two final arguments.
#[derive(Debug, Clone)]
pub struct ExternalCommandTranslator {
    pub program: String,
    pub args: Vec<String>,
}

impl ExternalCommandTranslator {
    pub fn new(program: impl Into<String>, args: Vec<String>) -> Self {
        Self {
            program: program.into(),
            args,
        }
    }

    fn run(&self, texts: &[&str], src: Lang, tgt: Lang) -> Result<Vec<String>, TranslateError> {
        let ext = |e: std::io::Error| TranslateError::External(format!("{}: {e}", self.program));
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .arg(src.code())
            .arg(tgt.code())
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(ext)?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let input: String = texts.iter().map(|t| format!("{}\n", t.replace('\n', " "))).collect();
        let writer = std::thread::spawn(move || stdin.write_all(input.as_bytes()));
        let stdout = child.stdout.take().expect("piped stdout");
        let lines: Vec<String> = BufReader::new(stdout).lines().collect::<Result<_, _>>().map_err(ext)?;
        let status = child.wait().map_err(ext)?;
        writer
            .join()
            .map_err(|_| TranslateError::External("stdin writer panicked".into()))?
            .map_err(ext)?;
        if !status.success() {
            return Err(TranslateError::External(format!("{} exited with {status}", self.program)));
        }
        if lines.len() != texts.len() {
            return Err(TranslateError::External(format!(
                "expected {} lines of output, got {}",
                texts.len(),
                lines.len()
            )));
        }
        Ok(lines)
    }
}

impl Translator for ExternalCommandTranslator {
    fn translate(&self, text: &str, src: Lang, tgt: Lang) -> Result<String, TranslateError> {
        self.translate_batch(&[text], src, tgt).pop().unwrap_or(Err(TranslateError::Empty))
    }

    fn translate_batch(&self, texts: &[&str], src: Lang, tgt: Lang) -> Vec<Result<String, TranslateError>> {
        match self.run(texts, src, tgt) {
            Ok(lines) => lines
                .into_iter()
                .map(|l| if l.trim().is_empty() { Err(TranslateError::Empty) } else { Ok(l) })
                .collect(),
            Err(e) => texts.iter().map(|_| Err(e.clone())).collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BackTranslation {
    pub pairs: Vec<SentencePair>,
    pub failures: usize,
}

/// For each target sentence `y`, emit `(reverse(y), y)` as a synthetic pair.
/// Sentences the translator fails on are skipped and counted.
pub fn back_translate(mono_tgt: &[Sentence], reverse: &dyn Translator, src_lang: Lang) -> BackTranslation {
    let Some(first) = mono_tgt.first() else {
        return BackTranslation::default();
    };
    let tgt_lang = first.lang;
    let texts: Vec<&str> = mono_tgt.iter().map(|s| s.text.as_str()).collect();
    let results = reverse.translate_batch(&texts, tgt_lang, src_lang);
    let mut out = BackTranslation::default();
    for (y, r) in mono_tgt.iter().zip(results) {
        let src = r
            .ok()
            .filter(|_| y.lang == tgt_lang)
            .and_then(|x| Sentence::new(y.doc_id.clone(), y.index, &x, src_lang));
        match src {
            Some(src) => out.pairs.push(SentencePair {
                src,
                tgt: y.clone(),
                origin: Origin::Synthetic,
            }),
            None => out.failures += 1,
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OriginCounts {
    pub mined: usize,
    pub seed: usize,
    pub synthetic: usize,
}

impl OriginCounts {
    pub fn of(pairs: &[SentencePair]) -> Self {
        let mut c = Self::default();
        for p in pairs {
            match p.origin {
                Origin::Mined => c.mined += 1,
                Origin::Seed => c.seed += 1,
                Origin::Synthetic => c.synthetic += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.mined + self.seed + self.synthetic
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedCorpus {
    pub pairs: Vec<SentencePair>,
    pub counts: OriginCounts,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("cap_ratio must be a positive finite number, got {0}")]
pub struct CapRatioError(pub f64);

/// Keep every distinct real pair, then append synthetic pairs in order until
/// `floor(cap_ratio × real)` of them are kept. Exact `(src_text, tgt_text)`
/// duplicates are dropped, first occurrence (real before synthetic) wins.
pub fn merge_corpora(
    real: Vec<SentencePair>,
    synthetic: Vec<SentencePair>,
    cap_ratio: f64,
) -> Result<AugmentedCorpus, CapRatioError> {
    if !(cap_ratio > 0.0 && cap_ratio.is_finite()) {
        return Err(CapRatioError(cap_ratio));
    }
    let mut seen: HashSet<(String, String)> = HashSet::new();
    let mut pairs: Vec<SentencePair> = real
        .into_iter()
        .filter(|p| seen.insert((p.src.text.clone(), p.tgt.text.clone())))
        .collect();
    let cap = (cap_ratio * pairs.len() as f64).floor() as usize;
    let mut kept = 0;
    for p in synthetic {
        if kept == cap {
            break;
        }
        if seen.insert((p.src.text.clone(), p.tgt.text.clone())) {
            pairs.push(SentencePair {
                origin: Origin::Synthetic,
                ..p
            });
            kept += 1;
        }
    }
    let counts = OriginCounts::of(&pairs);
    Ok(AugmentedCorpus { pairs, counts })
}
