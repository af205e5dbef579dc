//! Lexical translation tables trained with IBM Model 1 EM, and the
//! length-normalized cross-entropies computed from them.
//!
//! A table for direction `e → f` stores `t(f|e)` in compressed sparse rows:
//! one row per source word, holding only the target words that co-occurred
//! with it in training. Vocabularies are sorted, so column order within a row
//! is lexicographic order of the target word.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lang::Lang;
use crate::textprep::Sentence;

pub const DEFAULT_FLOOR: f64 = 1e-9;
pub const DEFAULT_ITERATIONS: usize = 10;

/// E-step shards; fixed so the count summation order never depends on the
/// number of worker threads.
const EM_SHARDS: usize = 16;

#[derive(Debug, thiserror::Error)]
pub enum LexError {
    #[error("training corpus has no usable sentence pairs")]
    EmptyCorpus,
    #[error("iterations must be at least 1")]
    ZeroIterations,
    #[error("zero-length sentence")]
    EmptySentence,
    #[error("probability floor must be in (0, 1], got {0}")]
    Floor(f64),
    #[error("table direction {table_src}->{table_tgt} does not match sentence pair {src}->{tgt}")]
    Direction {
        table_src: Lang,
        table_tgt: Lang,
        src: Lang,
        tgt: Lang,
    },
    #[error("invalid sentence pair: {0}")]
    InvalidPair(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Mined,
    Seed,
    Synthetic,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Origin::Mined => "mined",
            Origin::Seed => "seed",
            Origin::Synthetic => "synthetic",
        })
    }
}

impl std::str::FromStr for Origin {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mined" => Ok(Origin::Mined),
            "seed" => Ok(Origin::Seed),
            "synthetic" => Ok(Origin::Synthetic),
            other => Err(format!("unknown origin '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentencePair {
    pub src: Sentence,
    pub tgt: Sentence,
    pub origin: Origin,
}

impl SentencePair {
    pub fn new(src: Sentence, tgt: Sentence, origin: Origin) -> Result<Self, LexError> {
        if src.lang == tgt.lang {
            return Err(LexError::InvalidPair(format!("both sides are {}", src.lang)));
        }
        Ok(Self { src, tgt, origin })
    }

    pub fn swapped(&self) -> Self {
        Self {
            src: self.tgt.clone(),
            tgt: self.src.clone(),
            origin: self.origin,
        }
    }
}

/// Read `src_text \t tgt_text` lines into pairs. Lines where either side
/// normalizes to nothing are skipped and counted.
pub fn read_parallel_tsv<R: BufRead>(
    r: R,
    src_lang: Lang,
    tgt_lang: Lang,
    origin: Origin,
    doc_id: &str,
) -> Result<(Vec<SentencePair>, usize), LexError> {
    let mut pairs = Vec::new();
    let mut skipped = 0;
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let Some((s, t)) = line.split_once('\t') else {
            return Err(LexError::Malformed { line: n + 1, message: "expected two tab-separated columns".into() });
        };
        match (Sentence::new(doc_id, n, s, src_lang), Sentence::new(doc_id, n, t, tgt_lang)) {
            (Some(s), Some(t)) => pairs.push(SentencePair::new(s, t, origin)?),
            _ => skipped += 1,
        }
    }
    Ok((pairs, skipped))
}

/// Whitespace tokenization of normalized text.
pub fn tokenize(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocab {
    words: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocab {
    /// Ids follow sorted word order.
    fn from_sorted(words: Vec<String>) -> Self {
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
        Self { words, index }
    }

    fn build<'a>(tokens: impl Iterator<Item = &'a str>) -> Self {
        let mut words: Vec<String> = tokens.map(str::to_string).collect();
        words.sort();
        words.dedup();
        Self::from_sorted(words)
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Structure {
    src_vocab: Vocab,
    tgt_vocab: Vocab,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
}

impl Structure {
    fn slot(&self, e: u32, f: u32) -> Option<usize> {
        let (lo, hi) = (self.row_ptr[e as usize], self.row_ptr[e as usize + 1]);
        self.cols[lo..hi].binary_search(&f).ok().map(|k| lo + k)
    }
}

/// Lexical translation probabilities `t(tgt_word | src_word)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LexTable {
    pub src_lang: Lang,
    pub tgt_lang: Lang,
    structure: Arc<Structure>,
    vals: Vec<f64>,
}

impl LexTable {
    /// Build a table from explicit entries; rows are used as given (callers
    /// are responsible for them summing to one).
    pub fn from_entries<'a>(
        src_lang: Lang,
        tgt_lang: Lang,
        entries: impl IntoIterator<Item = (&'a str, &'a str, f64)>,
    ) -> Self {
        let entries: Vec<(&str, &str, f64)> = entries.into_iter().collect();
        let src_vocab = Vocab::build(entries.iter().map(|e| e.0));
        let tgt_vocab = Vocab::build(entries.iter().map(|e| e.1));
        let mut triples: Vec<(u32, u32, f64)> = entries
            .iter()
            .map(|(e, f, p)| (src_vocab.id(e).unwrap(), tgt_vocab.id(f).unwrap(), *p))
            .collect();
        triples.sort_by_key(|t| (t.0, t.1));
        triples.dedup_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; src_vocab.len() + 1];
        for t in &triples {
            row_ptr[t.0 as usize + 1] += 1;
        }
        for i in 0..src_vocab.len() {
            row_ptr[i + 1] += row_ptr[i];
        }
        let structure = Structure {
            src_vocab,
            tgt_vocab,
            row_ptr,
            cols: triples.iter().map(|t| t.1).collect(),
        };
        Self {
            src_lang,
            tgt_lang,
            structure: Arc::new(structure),
            vals: triples.iter().map(|t| t.2).collect(),
        }
    }

    pub fn src_vocab(&self) -> &Vocab {
        &self.structure.src_vocab
    }

    pub fn tgt_vocab(&self) -> &Vocab {
        &self.structure.tgt_vocab
    }

    pub fn entry_count(&self) -> usize {
        self.vals.len()
    }

    /// `t(tgt|src)`, zero when the pair never co-occurred.
    pub fn prob(&self, src_word: &str, tgt_word: &str) -> f64 {
        match (self.src_vocab().id(src_word), self.tgt_vocab().id(tgt_word)) {
            (Some(e), Some(f)) => self.prob_ids(e, f),
            _ => 0.0,
        }
    }

    fn prob_ids(&self, e: u32, f: u32) -> f64 {
        self.structure.slot(e, f).map_or(0.0, |k| self.vals[k])
    }

    fn row_range(&self, e: u32) -> std::ops::Range<usize> {
        self.structure.row_ptr[e as usize]..self.structure.row_ptr[e as usize + 1]
    }

    pub fn row(&self, src_word: &str) -> Vec<(&str, f64)> {
        let Some(e) = self.src_vocab().id(src_word) else {
            return Vec::new();
        };
        self.row_range(e)
            .map(|k| (self.tgt_vocab().word(self.structure.cols[k]), self.vals[k]))
            .collect()
    }

    pub fn row_sum(&self, src_word: &str) -> f64 {
        self.row(src_word).iter().map(|(_, p)| p).sum()
    }

    /// Largest `|Σ_f t(f|e) − 1|` over all rows.
    pub fn max_row_deviation(&self) -> f64 {
        (0..self.src_vocab().len() as u32)
            .map(|e| (self.vals[self.row_range(e)].iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Most probable translation; ties go to the lexicographically smallest
    /// target word.
    pub fn best_translation(&self, src_word: &str) -> Option<(&str, f64)> {
        let e = self.src_vocab().id(src_word)?;
        let mut best: Option<(u32, f64)> = None;
        for k in self.row_range(e) {
            let p = self.vals[k];
            if best.is_none_or(|(_, bp)| p > bp) {
                best = Some((self.structure.cols[k], p));
            }
        }
        best.map(|(f, p)| (self.tgt_vocab().word(f), p))
    }

    /// Header `lextable <src> <tgt> <src vocab> <tgt vocab>`, then
    /// `src \t tgt \t p` lines in sorted order, p to 12 significant digits.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(
            w,
            "lextable\t{}\t{}\t{}\t{}",
            self.src_lang,
            self.tgt_lang,
            self.src_vocab().len(),
            self.tgt_vocab().len()
        )?;
        for e in 0..self.src_vocab().len() as u32 {
            let src = self.src_vocab().word(e);
            for k in self.row_range(e) {
                let tgt = self.tgt_vocab().word(self.structure.cols[k]);
                writeln!(w, "{src}\t{tgt}\t{}", format_sig(self.vals[k], 12))?;
            }
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(r: R) -> Result<Self, LexError> {
        let mut lines = r.lines();
        let malformed = |line: usize, message: &str| LexError::Malformed { line, message: message.into() };
        let header = lines.next().ok_or_else(|| malformed(1, "missing header"))??;
        let h: Vec<&str> = header.split('\t').collect();
        if h.len() != 5 || h[0] != "lextable" {
            return Err(malformed(1, "bad header"));
        }
        let src_lang: Lang = h[1].parse().map_err(|_| malformed(1, "bad source language"))?;
        let tgt_lang: Lang = h[2].parse().map_err(|_| malformed(1, "bad target language"))?;
        let mut rows: Vec<(String, String, f64)> = Vec::new();
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let [s, t, p] = cols[..] else {
                return Err(malformed(n + 2, "expected 3 columns"));
            };
            let p: f64 = p.parse().map_err(|_| malformed(n + 2, "bad probability"))?;
            rows.push((s.to_string(), t.to_string(), p));
        }
        let table = Self::from_entries(src_lang, tgt_lang, rows.iter().map(|(s, t, p)| (s.as_str(), t.as_str(), *p)));
        let (sv, tv): (usize, usize) = (
            h[3].parse().map_err(|_| malformed(1, "bad vocab size"))?,
            h[4].parse().map_err(|_| malformed(1, "bad vocab size"))?,
        );
        if sv != table.src_vocab().len() || tv != table.tgt_vocab().len() {
            return Err(malformed(1, "vocabulary sizes do not match entries"));
        }
        Ok(table)
    }
}

/// `%.{digits}g`-style formatting.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    let sci = format!("{:.*e}", digits - 1, x);
    // rounding can bump the exponent (9.99.. -> 1.00e+1); trust the formatter's
    let exp = sci
        .rsplit_once('e')
        .and_then(|(_, e)| e.parse::<i32>().ok())
        .unwrap_or(exp);
    if exp < -5 || exp >= digits as i32 {
        let (mantissa, e) = sci.split_once('e').unwrap();
        format!("{}e{}", trim_zeros(mantissa), e)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone)]
struct Encoded {
    src: Vec<u32>,
    tgt: Vec<u32>,
}

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct Trained {
    pub table: LexTable,
    /// Pairs dropped because one side had no tokens.
    pub skipped: usize,
    /// Corpus log-likelihood under the table before each sweep, then after the last.
    pub log_likelihoods: Vec<f64>,
}

/// IBM Model 1 EM state for one direction (no NULL source word).
pub struct Model1 {
    table: LexTable,
    corpus: Vec<Encoded>,
    skipped: usize,
}

impl Model1 {
    /// Initialize `t(f|e)` uniformly over the target words seen with `e`.
    pub fn new(pairs: &[SentencePair]) -> Result<Self, LexError> {
        let (src_lang, tgt_lang) = match pairs.first() {
            Some(p) => (p.src.lang, p.tgt.lang),
            None => return Err(LexError::EmptyCorpus),
        };
        let mut skipped = 0;
        let tokenized: Vec<(Vec<&str>, Vec<&str>)> = pairs
            .iter()
            .filter_map(|p| {
                let (s, t) = (tokenize(&p.src.text), tokenize(&p.tgt.text));
                if s.is_empty() || t.is_empty() {
                    skipped += 1;
                    None
                } else {
                    Some((s, t))
                }
            })
            .collect();
        if tokenized.is_empty() {
            return Err(LexError::EmptyCorpus);
        }
        let src_vocab = Vocab::build(tokenized.iter().flat_map(|(s, _)| s.iter().copied()));
        let tgt_vocab = Vocab::build(tokenized.iter().flat_map(|(_, t)| t.iter().copied()));
        let corpus: Vec<Encoded> = tokenized
            .iter()
            .map(|(s, t)| Encoded {
                src: s.iter().map(|w| src_vocab.id(w).unwrap()).collect(),
                tgt: t.iter().map(|w| tgt_vocab.id(w).unwrap()).collect(),
            })
            .collect();

        let mut links: Vec<(u32, u32)> = corpus
            .par_iter()
            .flat_map_iter(|p| p.src.iter().flat_map(move |&e| p.tgt.iter().map(move |&f| (e, f))))
            .collect();
        links.par_sort_unstable();
        links.dedup();

        let mut row_ptr = vec![0usize; src_vocab.len() + 1];
        for &(e, _) in &links {
            row_ptr[e as usize + 1] += 1;
        }
        for i in 0..src_vocab.len() {
            row_ptr[i + 1] += row_ptr[i];
        }
        let vals: Vec<f64> = links
            .iter()
            .map(|&(e, _)| 1.0 / (row_ptr[e as usize + 1] - row_ptr[e as usize]) as f64)
            .collect();
        let structure = Structure {
            src_vocab,
            tgt_vocab,
            row_ptr,
            cols: links.iter().map(|&(_, f)| f).collect(),
        };
        Ok(Self {
            table: LexTable {
                src_lang,
                tgt_lang,
                structure: Arc::new(structure),
                vals,
            },
            corpus,
            skipped,
        })
    }

    pub fn table(&self) -> &LexTable {
        &self.table
    }

    pub fn skipped(&self) -> usize {
        self.skipped
    }

    /// Model 1 log-likelihood `Σ_s Σ_j ln((1/l_s) Σ_i t(f_j|e_i))` of the
    /// training corpus under the current table.
    pub fn log_likelihood(&self) -> f64 {
        let table = &self.table;
        self.corpus
            .par_iter()
            .map(|p| {
                let inv_l = 1.0 / p.src.len() as f64;
                p.tgt
                    .iter()
                    .map(|&f| (inv_l * p.src.iter().map(|&e| table.prob_ids(e, f)).sum::<f64>()).ln())
                    .sum::<f64>()
            })
            .collect::<Vec<f64>>()
            .iter()
            .sum()
    }

    /// One full E + M sweep.
    pub fn step(&mut self) {
        let table = &self.table;
        let structure = &table.structure;
        let nnz = table.vals.len();
        let shard_len = self.corpus.len().div_ceil(EM_SHARDS).max(1);
        let partials: Vec<Vec<f64>> = self
            .corpus
            .par_chunks(shard_len)
            .map(|shard| {
                let mut counts = vec![0.0f64; nnz];
                let mut slots = Vec::new();
                for p in shard {
                    for &f in &p.tgt {
                        slots.clear();
                        slots.extend(p.src.iter().map(|&e| structure.slot(e, f).expect("co-occurring link")));
                        let denom: f64 = slots.iter().map(|&k| table.vals[k]).sum();
                        for &k in &slots {
                            counts[k] += table.vals[k] / denom;
                        }
                    }
                }
                counts
            })
            .collect();
        let mut counts = vec![0.0f64; nnz];
        for part in &partials {
            for (c, p) in counts.iter_mut().zip(part) {
                *c += p;
            }
        }
        let mut vals = counts;
        for e in 0..structure.src_vocab.len() {
            let range = structure.row_ptr[e]..structure.row_ptr[e + 1];
            let total: f64 = vals[range.clone()].iter().sum();
            if total > 0.0 {
                for v in &mut vals[range] {
                    *v /= total;
                }
            }
        }
        self.table.vals = vals;
    }

    pub fn into_table(self) -> LexTable {
        self.table
    }
}

/// Train `t(tgt|src)` with exactly `iterations` EM sweeps.
pub fn train_model1(pairs: &[SentencePair], iterations: usize) -> Result<Trained, LexError> {
    train_model1_observed(pairs, iterations, |_, _| {})
}

/// As [`train_model1`], calling `observe(sweep, table)` after every sweep
/// (sweeps numbered from 1).
pub fn train_model1_observed(
    pairs: &[SentencePair],
    iterations: usize,
    mut observe: impl FnMut(usize, &LexTable),
) -> Result<Trained, LexError> {
    if iterations == 0 {
        return Err(LexError::ZeroIterations);
    }
    let mut model = Model1::new(pairs)?;
    let mut log_likelihoods = Vec::with_capacity(iterations + 1);
    for sweep in 1..=iterations {
        log_likelihoods.push(model.log_likelihood());
        model.step();
        observe(sweep, model.table());
    }
    log_likelihoods.push(model.log_likelihood());
    let skipped = model.skipped();
    Ok(Trained {
        table: model.into_table(),
        skipped,
        log_likelihoods,
    })
}

/// How each target word is attached to the source sentence when scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alignment {
    /// Model 1 likelihood: `(1/l_src) Σ_i t(f|e_i)` per target word.
    Uniform,
    /// Best single link: `max_i t(f|e_i)` per target word. The uniform form
    /// carries a `ln l_src` offset even for perfect translations; this one
    /// reaches zero for them.
    #[default]
    BestLink,
}

/// Nats per target word.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct CrossEntropy(pub f64);

impl CrossEntropy {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Length-normalized Model 1 cross-entropy `−ln p(tgt|src) / l_tgt`, each
/// per-word term floored at `floor`.
pub fn cross_entropy(src: &Sentence, tgt: &Sentence, table: &LexTable, floor: f64) -> Result<CrossEntropy, LexError> {
    cross_entropy_with(src, tgt, table, floor, Alignment::Uniform)
}

pub fn cross_entropy_with(
    src: &Sentence,
    tgt: &Sentence,
    table: &LexTable,
    floor: f64,
    alignment: Alignment,
) -> Result<CrossEntropy, LexError> {
    if src.lang != table.src_lang || tgt.lang != table.tgt_lang {
        return Err(LexError::Direction {
            table_src: table.src_lang,
            table_tgt: table.tgt_lang,
            src: src.lang,
            tgt: tgt.lang,
        });
    }
    cross_entropy_text(&src.text, &tgt.text, table, floor, alignment)
}

/// As [`cross_entropy_with`] on raw text, without the language check.
pub fn cross_entropy_text(
    src: &str,
    tgt: &str,
    table: &LexTable,
    floor: f64,
    alignment: Alignment,
) -> Result<CrossEntropy, LexError> {
    if !(floor > 0.0 && floor <= 1.0) {
        return Err(LexError::Floor(floor));
    }
    let src_ids: Vec<Option<u32>> = tokenize(src).iter().map(|w| table.src_vocab().id(w)).collect();
    let tgt_ids: Vec<Option<u32>> = tokenize(tgt).iter().map(|w| table.tgt_vocab().id(w)).collect();
    if src_ids.is_empty() || tgt_ids.is_empty() {
        return Err(LexError::EmptySentence);
    }
    let inv_l = 1.0 / src_ids.len() as f64;
    let mut nll = 0.0;
    for f in &tgt_ids {
        let links = src_ids.iter().map(|e| match (e, f) {
            (Some(e), Some(f)) => table.prob_ids(*e, *f),
            _ => 0.0,
        });
        let p = match alignment {
            Alignment::Uniform => inv_l * links.sum::<f64>(),
            Alignment::BestLink => links.fold(0.0, f64::max),
        };
        nll -= p.max(floor).ln();
    }
    Ok(CrossEntropy((nll / tgt_ids.len() as f64).max(0.0)))
}

/// Word-by-word argmax translation; unknown words are copied through.
pub fn translate_naive(src: &Sentence, table: &LexTable) -> String {
    translate_text(&src.text, table)
}

pub fn translate_text(text: &str, table: &LexTable) -> String {
    tokenize(text)
        .iter()
        .map(|w| table.best_translation(w).map_or(*w, |(t, _)| t))
        .collect::<Vec<_>>()
        .join(" ")
}
