//! Candidate generation over comparable document pairs and dual
//! cross-entropy filtering.

use std::collections::HashSet;
use std::io::{self, BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lang::Lang;
use crate::lexmodel::{cross_entropy_with, Alignment, CrossEntropy, LexError, LexTable, Origin, SentencePair, DEFAULT_FLOOR};
use crate::textprep::Sentence;

#[derive(Debug, thiserror::Error)]
pub enum MineError {
    #[error("invalid filter config: {0}")]
    Config(String),
    #[error(transparent)]
    Lex(#[from] LexError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    /// Weight of the forward (src→tgt) cross-entropy.
    pub w: f64,
    pub threshold: f64,
    pub window: usize,
    pub ratio_bounds: (f64, f64),
    pub floor: f64,
    pub alignment: Alignment,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            w: 0.5,
            threshold: 0.5,
            window: 5,
            ratio_bounds: (0.5, 2.0),
            floor: DEFAULT_FLOOR,
            alignment: Alignment::BestLink,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), MineError> {
        let err = |m: String| Err(MineError::Config(m));
        if !(0.0..=1.0).contains(&self.w) {
            return err(format!("w must be in [0, 1], got {}", self.w));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return err(format!("threshold must be in (0, 1), got {}", self.threshold));
        }
        let (lo, hi) = self.ratio_bounds;
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return err(format!("ratio_bounds must satisfy 0 < lo < hi, got [{lo}, {hi}]"));
        }
        if !(self.floor > 0.0 && self.floor <= 1.0) {
            return err(format!("floor must be in (0, 1], got {}", self.floor));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePair {
    pub src: Sentence,
    pub tgt: Sentence,
    pub pos_src: usize,
    pub pos_tgt: usize,
    /// `|src chars| / |tgt chars|`.
    pub len_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPair {
    pub pair: CandidatePair,
    pub h_fwd: CrossEntropy,
    pub h_rev: CrossEntropy,
    pub score: f64,
    pub accepted: bool,
}

/// Pairs `(i, j)` whose positions lie within `window` of the length-scaled
/// diagonal and whose character-length ratio is within bounds, ordered by
/// `(i, j)`.
pub fn generate_candidates(src_doc: &[Sentence], tgt_doc: &[Sentence], cfg: &FilterConfig) -> Vec<CandidatePair> {
    if src_doc.is_empty() || tgt_doc.is_empty() {
        return Vec::new();
    }
    let scale = src_doc.len() as f64 / tgt_doc.len() as f64;
    let (lo, hi) = cfg.ratio_bounds;
    let window = cfg.window as f64;
    let mut out = Vec::new();
    for (i, s) in src_doc.iter().enumerate() {
        let s_len = s.char_len() as f64;
        // |i - j·scale| <= window  ⇔  (i - window)/scale <= j <= (i + window)/scale
        let j_lo = ((i as f64 - window) / scale).ceil().max(0.0) as usize;
        let j_hi = (((i as f64 + window) / scale).floor() as usize).min(tgt_doc.len() - 1);
        for (j, t) in tgt_doc.iter().enumerate().take(j_hi + 1).skip(j_lo) {
            if (i as f64 - j as f64 * scale).abs() > window || s.lang == t.lang {
                continue;
            }
            let len_ratio = s_len / t.char_len() as f64;
            if len_ratio < lo || len_ratio > hi {
                continue;
            }
            out.push(CandidatePair {
                src: s.clone(),
                tgt: t.clone(),
                pos_src: i,
                pos_tgt: j,
                len_ratio,
            });
        }
    }
    out
}

/// `exp(−(w·h_fwd + (1−w)·h_rev + |h_fwd − h_rev|))`.
pub fn combine(h_fwd: f64, h_rev: f64, w: f64) -> f64 {
    let mean = w * h_fwd + (1.0 - w) * h_rev;
    (-(mean + (h_fwd - h_rev).abs())).exp()
}

pub fn dual_score(pair: CandidatePair, fwd: &LexTable, rev: &LexTable, cfg: &FilterConfig) -> Result<ScoredPair, LexError> {
    let h_fwd = cross_entropy_with(&pair.src, &pair.tgt, fwd, cfg.floor, cfg.alignment)?;
    let h_rev = cross_entropy_with(&pair.tgt, &pair.src, rev, cfg.floor, cfg.alignment)?;
    let score = combine(h_fwd.value(), h_rev.value(), cfg.w);
    Ok(ScoredPair {
        pair,
        h_fwd,
        h_rev,
        score,
        accepted: score >= cfg.threshold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinedPair {
    pub pair: SentencePair,
    pub score: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MineOutcome {
    /// Sorted by descending score.
    pub pairs: Vec<MinedPair>,
    pub candidates: usize,
    pub accepted: usize,
}

/// Score every candidate of every document pair, keep accepted ones, and
/// select a one-to-one subset greedily by descending score. Ties go to the
/// earlier `(document, pos_src, pos_tgt)`.
pub fn mine_corpus(
    doc_pairs: &[(Vec<Sentence>, Vec<Sentence>)],
    fwd: &LexTable,
    rev: &LexTable,
    cfg: &FilterConfig,
) -> Result<MineOutcome, MineError> {
    cfg.validate()?;
    let candidates: Vec<(usize, CandidatePair)> = doc_pairs
        .par_iter()
        .enumerate()
        .flat_map_iter(|(d, (s, t))| generate_candidates(s, t, cfg).into_iter().map(move |c| (d, c)))
        .collect();
    let total = candidates.len();
    let scored: Vec<(usize, ScoredPair)> = candidates
        .into_par_iter()
        .map(|(d, c)| dual_score(c, fwd, rev, cfg).map(|s| (d, s)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut accepted: Vec<(usize, ScoredPair)> = scored.into_iter().filter(|(_, s)| s.accepted).collect();
    let accepted_count = accepted.len();
    accepted.sort_by(|(da, a), (db, b)| {
        b.score
            .total_cmp(&a.score)
            .then(da.cmp(db))
            .then(a.pair.pos_src.cmp(&b.pair.pos_src))
            .then(a.pair.pos_tgt.cmp(&b.pair.pos_tgt))
    });
    let mut used_src = HashSet::new();
    let mut used_tgt = HashSet::new();
    let mut pairs = Vec::new();
    for (d, s) in accepted {
        if used_src.contains(&(d, s.pair.pos_src)) || used_tgt.contains(&(d, s.pair.pos_tgt)) {
            continue;
        }
        used_src.insert((d, s.pair.pos_src));
        used_tgt.insert((d, s.pair.pos_tgt));
        pairs.push(MinedPair {
            pair: SentencePair {
                src: s.pair.src,
                tgt: s.pair.tgt,
                origin: Origin::Mined,
            },
            score: s.score,
        });
    }
    Ok(MineOutcome {
        pairs,
        candidates: total,
        accepted: accepted_count,
    })
}

/// One line of a corpus file; `score` is present for mined pairs only.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusRow {
    pub score: Option<f64>,
    pub pair: SentencePair,
}

impl From<MinedPair> for CorpusRow {
    fn from(m: MinedPair) -> Self {
        Self {
            score: Some(m.score),
            pair: m.pair,
        }
    }
}

/// Columns `score, src_lang, tgt_lang, src_text, tgt_text`, plus `origin`
/// when `with_origin` is set. Scores have 6 decimals; missing scores are
/// written as an empty field.
pub fn write_corpus_tsv<W: Write>(mut w: W, rows: &[CorpusRow], with_origin: bool) -> io::Result<()> {
    for r in rows {
        let score = r.score.map(|s| format!("{s:.6}")).unwrap_or_default();
        write!(
            w,
            "{score}\t{}\t{}\t{}\t{}",
            r.pair.src.lang, r.pair.tgt.lang, r.pair.src.text, r.pair.tgt.text
        )?;
        if with_origin {
            write!(w, "\t{}", r.pair.origin)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Reads either layout. Rows without an origin column are mined. Sentences
/// get `doc_id` = `source` and index = line number.
pub fn read_corpus_tsv<R: BufRead>(r: R, source: &str) -> Result<Vec<CorpusRow>, LexError> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let bad = |m: &str| LexError::Malformed { line: n + 1, message: m.into() };
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 5 && cols.len() != 6 {
            return Err(bad("expected 5 or 6 columns"));
        }
        let score = match cols[0] {
            "" => None,
            s => Some(s.parse::<f64>().map_err(|_| bad("bad score"))?),
        };
        let src_lang: Lang = cols[1].parse().map_err(|_| bad("bad source language"))?;
        let tgt_lang: Lang = cols[2].parse().map_err(|_| bad("bad target language"))?;
        let origin = match cols.get(5) {
            Some(o) => o.parse::<Origin>().map_err(|e| bad(&e))?,
            None => Origin::Mined,
        };
        let src = Sentence::new(source, n, cols[3], src_lang).ok_or_else(|| bad("empty source text"))?;
        let tgt = Sentence::new(source, n, cols[4], tgt_lang).ok_or_else(|| bad("empty target text"))?;
        out.push(CorpusRow {
            score,
            pair: SentencePair::new(src, tgt, origin)?,
        });
    }
    Ok(out)
}
