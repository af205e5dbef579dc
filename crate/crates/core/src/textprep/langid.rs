//! Character n-gram language identification.
//!
//! A script census picks the candidate set first (Ethiopic text can only be
//! Amharic or Tigrinya, Latin text only English); add-one smoothed 1- to
//! 3-gram profiles then separate the candidates.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::lang::Lang;

use super::normalize;

pub const MAX_ORDER: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Script {
    Ethiopic,
    Latin,
    Mixed,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LangPrediction {
    pub lang: Lang,
    pub confidence: f64,
    pub script: Script,
}

#[derive(Debug, thiserror::Error)]
pub enum LangIdError {
    #[error("empty input")]
    EmptyInput,
    #[error("no language profiles supplied")]
    NoProfiles,
    #[error("no profile covers {0:?} script text")]
    NoCandidate(Script),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("profile line {line}: {message}")]
    Malformed { line: usize, message: String },
}

pub fn is_ethiopic(c: char) -> bool {
    ('\u{1200}'..='\u{137F}').contains(&c)
}

fn is_latin(c: char) -> bool {
    c.is_ascii_alphabetic() || (('\u{00C0}'..='\u{024F}').contains(&c) && c.is_alphabetic())
}

/// Letter census: Ethiopic if at least half the letters are in U+1200–U+137F.
pub fn classify_script(text: &str) -> Script {
    let (mut letters, mut ethiopic, mut latin) = (0usize, 0usize, 0usize);
    for c in text.chars().filter(|c| c.is_alphabetic()) {
        letters += 1;
        if is_ethiopic(c) {
            ethiopic += 1;
        } else if is_latin(c) {
            latin += 1;
        }
    }
    if letters == 0 {
        Script::Other
    } else if 2 * ethiopic >= letters {
        Script::Ethiopic
    } else if 2 * latin >= letters {
        Script::Latin
    } else if ethiopic > 0 && latin > 0 {
        Script::Mixed
    } else {
        Script::Other
    }
}

/// Character n-grams (orders 1..=3) of the letter runs in `text`, each word
/// padded with a space on both sides. Unigrams of the padding are skipped.
pub fn char_ngrams(text: &str) -> Vec<(usize, String)> {
    let lowered = normalize(text).to_lowercase();
    let mut grams = Vec::new();
    for word in lowered.split(|c: char| !c.is_alphabetic()).filter(|w| !w.is_empty()) {
        let padded: Vec<char> = std::iter::once(' ')
            .chain(word.chars())
            .chain(std::iter::once(' '))
            .collect();
        for n in 1..=MAX_ORDER {
            for w in padded.windows(n) {
                if n == 1 && w[0] == ' ' {
                    continue;
                }
                grams.push((n, w.iter().collect()));
            }
        }
    }
    grams
}

#[derive(Debug, Clone, Default, PartialEq)]
struct OrderTable {
    counts: BTreeMap<String, u64>,
    total: u64,
}

impl OrderTable {
    /// Distinct grams plus one slot for everything unseen.
    fn vocab_size(&self) -> u64 {
        self.counts.len() as u64 + 1
    }

    fn denominator(&self) -> f64 {
        (self.total + self.vocab_size()) as f64
    }

    fn logprob(&self, gram: &str) -> f64 {
        let c = self.counts.get(gram).copied().unwrap_or(0);
        ((c + 1) as f64).ln() - self.denominator().ln()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LangProfile {
    pub lang: Lang,
    orders: [OrderTable; MAX_ORDER],
}

#[derive(Serialize, Deserialize)]
struct ProfileHeader {
    lang: Lang,
    totals: [u64; MAX_ORDER],
    vocab_sizes: [u64; MAX_ORDER],
}

#[derive(Serialize, Deserialize)]
struct ProfileEntry {
    n: usize,
    gram: String,
    count: u64,
    logprob: f64,
}

impl LangProfile {
    pub fn train<'a>(lang: Lang, texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut orders: [OrderTable; MAX_ORDER] = Default::default();
        for text in texts {
            for (n, gram) in char_ngrams(text) {
                let t = &mut orders[n - 1];
                *t.counts.entry(gram).or_insert(0) += 1;
                t.total += 1;
            }
        }
        Self { lang, orders }
    }

    pub fn vocab_sizes(&self) -> [u64; MAX_ORDER] {
        std::array::from_fn(|i| self.orders[i].vocab_size())
    }

    pub fn logprob(&self, n: usize, gram: &str) -> f64 {
        self.orders[n - 1].logprob(gram)
    }

    /// Probability mass assigned to seen grams of order `n`; below 1 by the
    /// share reserved for unseen grams.
    pub fn seen_mass(&self, n: usize) -> f64 {
        let t = &self.orders[n - 1];
        t.counts.values().map(|&c| (c + 1) as f64).sum::<f64>() / t.denominator()
    }

    pub fn log_likelihood(&self, grams: &[(usize, String)]) -> f64 {
        grams.iter().map(|(n, g)| self.logprob(*n, g)).sum()
    }

    /// One header record, then one record per n-gram.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> io::Result<()> {
        let header = ProfileHeader {
            lang: self.lang,
            totals: std::array::from_fn(|i| self.orders[i].total),
            vocab_sizes: self.vocab_sizes(),
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for (i, table) in self.orders.iter().enumerate() {
            for (gram, &count) in &table.counts {
                let entry = ProfileEntry {
                    n: i + 1,
                    gram: gram.clone(),
                    count,
                    logprob: table.logprob(gram),
                };
                serde_json::to_writer(&mut w, &entry)?;
                w.write_all(b"\n")?;
            }
        }
        Ok(())
    }

    /// Counts are authoritative on load; stored log probabilities are informational.
    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self, LangIdError> {
        let mut lines = r.lines().enumerate();
        let malformed = |line: usize, message: String| LangIdError::Malformed { line, message };
        let header: ProfileHeader = match lines.next() {
            Some((_, line)) => serde_json::from_str(&line?).map_err(|e| malformed(1, e.to_string()))?,
            None => return Err(malformed(1, "missing header".into())),
        };
        let mut orders: [OrderTable; MAX_ORDER] = Default::default();
        for (n, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let e: ProfileEntry =
                serde_json::from_str(&line).map_err(|err| malformed(n + 1, err.to_string()))?;
            if !(1..=MAX_ORDER).contains(&e.n) {
                return Err(malformed(n + 1, format!("order {} out of range", e.n)));
            }
            let t = &mut orders[e.n - 1];
            t.counts.insert(e.gram, e.count);
            t.total += e.count;
        }
        for (i, t) in orders.iter().enumerate() {
            if t.total != header.totals[i] {
                return Err(malformed(
                    1,
                    format!("order {} total {} does not match entries ({})", i + 1, header.totals[i], t.total),
                ));
            }
        }
        Ok(Self { lang: header.lang, orders })
    }

    /// Profiles trained on the seed texts shipped with the crate.
    pub fn bundled() -> Vec<LangProfile> {
        BUNDLED_PROFILES
            .iter()
            .map(|(_, data)| Self::read_jsonl(data.as_bytes()).expect("bundled profile is well formed"))
            .collect()
    }

    /// Retrain from the bundled seed texts.
    pub fn train_bundled_seeds() -> Vec<LangProfile> {
        BUNDLED_SEEDS
            .iter()
            .map(|(lang, text)| Self::train(*lang, text.lines()))
            .collect()
    }
}

pub const BUNDLED_SEEDS: [(Lang, &str); 3] = [
    (Lang::Am, include_str!("../../data/seed/am.txt")),
    (Lang::Ti, include_str!("../../data/seed/ti.txt")),
    (Lang::En, include_str!("../../data/seed/en.txt")),
];

const BUNDLED_PROFILES: [(Lang, &str); 3] = [
    (Lang::Am, include_str!("../../data/profiles/am.jsonl")),
    (Lang::Ti, include_str!("../../data/profiles/ti.jsonl")),
    (Lang::En, include_str!("../../data/profiles/en.jsonl")),
];

/// Identify the language of `text` among `profiles`.
///
/// Text without any letter is reported as [`Lang::Unknown`] with script
/// [`Script::Other`].
pub fn detect_language(text: &str, profiles: &[LangProfile]) -> Result<LangPrediction, LangIdError> {
    if text.trim().is_empty() {
        return Err(LangIdError::EmptyInput);
    }
    if profiles.is_empty() {
        return Err(LangIdError::NoProfiles);
    }
    let script = classify_script(text);
    let allowed: &[Lang] = match script {
        Script::Ethiopic => &[Lang::Am, Lang::Ti],
        Script::Latin => &[Lang::En],
        Script::Mixed | Script::Other => &[],
    };
    let grams = char_ngrams(text);
    if grams.is_empty() {
        return Ok(LangPrediction { lang: Lang::Unknown, confidence: 1.0, script });
    }
    let candidates: Vec<&LangProfile> = profiles
        .iter()
        .filter(|p| allowed.is_empty() || allowed.contains(&p.lang))
        .collect();
    if candidates.is_empty() {
        return Err(LangIdError::NoCandidate(script));
    }

    let scores: Vec<f64> = candidates.iter().map(|p| p.log_likelihood(&grams)).collect();
    let best = scores
        .iter()
        .enumerate()
        // first maximum wins
        .fold(0, |b, (i, s)| if *s > scores[b] { i } else { b });
    let max = scores[best];
    let z: f64 = scores.iter().map(|s| (s - max).exp()).sum();
    Ok(LangPrediction {
        lang: candidates[best].lang,
        confidence: 1.0 / z,
        script,
    })
}

/// Softmax over candidate scores, exposed for callers that want the full distribution.
pub fn language_distribution(text: &str, profiles: &[LangProfile]) -> HashMap<Lang, f64> {
    let grams = char_ngrams(text);
    let scores: Vec<(Lang, f64)> = profiles.iter().map(|p| (p.lang, p.log_likelihood(&grams))).collect();
    let max = scores.iter().map(|(_, s)| *s).fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = scores.iter().map(|(_, s)| (s - max).exp()).sum();
    scores.into_iter().map(|(l, s)| (l, (s - max).exp() / z)).collect()
}
