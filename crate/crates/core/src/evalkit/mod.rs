//! Blind human evaluation: shuffled sessions over system outputs, 0–4
//! Likert scores, unblinded aggregation and a portable dataset archive.

mod archive;
mod report;
mod store;

pub use archive::{export_eval_dataset, import_eval_dataset, ArchiveError, EvalDataset, ARCHIVE_VERSION};
pub use report::{render_report, unblind, unblind_and_aggregate, Aggregate, Diagnostics, ReportCell};
pub use store::{EvalStore, NextItem};

use std::collections::HashSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::lang::Lang;

pub const LIKERT_MAX: u8 = 4;

/// Scale labels, indexed by value.
pub const LIKERT_LEVELS: [&str; 5] = [
    "Wrong translation",
    "Major problem",
    "Minor problem",
    "Good translation",
    "Accurate and fluent",
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("invalid Likert value {0}: must be an integer from 0 to 4")]
    InvalidLikert(i64),
    #[error("no items to evaluate")]
    NoItems,
    #[error("item '{0}' has fewer than 2 outputs")]
    TooFewOutputs(String),
    #[error("item '{0}' repeats a system id")]
    DuplicateSystem(String),
    #[error("duplicate item id '{0}'")]
    DuplicateItem(String),
    #[error("story item '{0}' has more than 2 paragraphs")]
    StoryTooLong(String),
    #[error("unknown session '{0}'")]
    UnknownSession(String),
    #[error("item '{item}' is not in session '{session}'")]
    UnknownItem { session: String, item: String },
    #[error("position {position} out of range for item '{item}' ({outputs} outputs)")]
    BadPosition { item: String, position: usize, outputs: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Direction {
    pub src: Lang,
    pub tgt: Lang,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.src, self.tgt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Sentence,
    Story,
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Granularity::Sentence => "sentence",
            Granularity::Story => "story",
        })
    }
}

impl std::str::FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sentence" => Ok(Granularity::Sentence),
            "story" => Ok(Granularity::Story),
            other => Err(format!("unknown granularity '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemOutput {
    pub system_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalItem {
    pub item_id: String,
    pub direction: Direction,
    pub granularity: Granularity,
    pub genre: String,
    pub source_text: String,
    pub outputs: Vec<SystemOutput>,
}

impl EvalItem {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.outputs.len() < 2 {
            return Err(EvalError::TooFewOutputs(self.item_id.clone()));
        }
        let mut ids = HashSet::new();
        if !self.outputs.iter().all(|o| ids.insert(o.system_id.as_str())) {
            return Err(EvalError::DuplicateSystem(self.item_id.clone()));
        }
        if self.granularity == Granularity::Story && paragraph_count(&self.source_text) > 2 {
            return Err(EvalError::StoryTooLong(self.item_id.clone()));
        }
        Ok(())
    }
}

fn paragraph_count(text: &str) -> usize {
    let mut count = 0;
    let mut in_paragraph = false;
    for line in text.lines() {
        let blank = line.trim().is_empty();
        if !blank && !in_paragraph {
            count += 1;
        }
        in_paragraph = !blank;
    }
    count
}

/// Server-side record of one item in a session: position `p` shows
/// `outputs[permutation[p]]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionItem {
    pub item_id: String,
    pub permutation: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlindSession {
    pub session_id: String,
    pub evaluator_id: String,
    pub seed: u64,
    pub items: Vec<SessionItem>,
}

impl BlindSession {
    pub fn item(&self, item_id: &str) -> Option<&SessionItem> {
        self.items.iter().find(|i| i.item_id == item_id)
    }
}

/// What the evaluator's client receives: no system ids, no permutation, no seed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlindItem {
    pub session_id: String,
    pub item_id: String,
    pub direction: Direction,
    pub granularity: Granularity,
    pub source_text: String,
    pub outputs: Vec<String>,
}

impl BlindItem {
    pub fn new(session: &BlindSession, entry: &SessionItem, item: &EvalItem) -> Self {
        Self {
            session_id: session.session_id.clone(),
            item_id: item.item_id.clone(),
            direction: item.direction,
            granularity: item.granularity,
            source_text: item.source_text.clone(),
            outputs: entry.permutation.iter().map(|&k| item.outputs[k].text.clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub session_id: String,
    pub evaluator_id: String,
    pub item_id: String,
    pub position: usize,
    pub value: u8,
    /// Milliseconds since the Unix epoch.
    pub timestamp: i64,
}

pub fn likert(value: i64) -> Result<u8, EvalError> {
    if (0..=LIKERT_MAX as i64).contains(&value) {
        Ok(value as u8)
    } else {
        Err(EvalError::InvalidLikert(value))
    }
}

/// Shuffle of `0..k` determined by `(seed, item_id)` alone.
pub fn item_permutation(seed: u64, item_id: &str, k: usize) -> Vec<usize> {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(item_id.as_bytes());
    let mut rng = ChaCha8Rng::from_seed(h.finalize().into());
    let mut perm: Vec<usize> = (0..k).collect();
    perm.shuffle(&mut rng);
    perm
}

pub fn session_id(evaluator_id: &str, seed: u64) -> String {
    let mut h = Sha256::new();
    h.update(evaluator_id.as_bytes());
    h.update([0]);
    h.update(seed.to_le_bytes());
    h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
}

pub fn create_session(items: &[EvalItem], evaluator_id: &str, seed: u64) -> Result<BlindSession, EvalError> {
    if items.is_empty() {
        return Err(EvalError::NoItems);
    }
    let mut ids = HashSet::new();
    for item in items {
        item.validate()?;
        if !ids.insert(item.item_id.as_str()) {
            return Err(EvalError::DuplicateItem(item.item_id.clone()));
        }
    }
    Ok(BlindSession {
        session_id: session_id(evaluator_id, seed),
        evaluator_id: evaluator_id.to_string(),
        seed,
        items: items
            .iter()
            .map(|i| SessionItem {
                item_id: i.item_id.clone(),
                permutation: item_permutation(seed, &i.item_id, i.outputs.len()),
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn item(id: &str, systems: &[&str]) -> EvalItem {
        EvalItem {
            item_id: id.into(),
            direction: Direction { src: Lang::Am, tgt: Lang::En },
            granularity: Granularity::Sentence,
            genre: "news".into(),
            source_text: format!("source {id}"),
            outputs: systems
                .iter()
                .enumerate()
                .map(|(k, s)| SystemOutput { system_id: s.to_string(), text: format!("output {k} for {id}") })
                .collect(),
        }
    }

    #[test]
    fn permutation_is_deterministic() {
        let items = [item("i1", &["sysA", "sysB"])];
        let a = create_session(&items, "ev", 7).unwrap();
        let b = create_session(&items, "ev", 7).unwrap();
        assert_eq!(a, b);
        let p = &a.items[0].permutation;
        assert!(p == &vec![0, 1] || p == &vec![1, 0]);
    }

    #[test]
    fn seeds_change_some_permutation() {
        let items: Vec<_> = (0..100).map(|i| item(&format!("i{i}"), &["a1", "b2", "c3", "d4"])).collect();
        let a = create_session(&items, "ev", 1).unwrap();
        let b = create_session(&items, "ev", 2).unwrap();
        assert!(a.items.iter().zip(&b.items).any(|(x, y)| x.permutation != y.permutation));
    }

    #[test]
    fn validation_errors() {
        assert_eq!(create_session(&[], "ev", 0), Err(EvalError::NoItems));
        assert_eq!(
            create_session(&[item("solo", &["a"])], "ev", 0),
            Err(EvalError::TooFewOutputs("solo".into()))
        );
        assert_eq!(
            create_session(&[item("dup", &["a", "a"])], "ev", 0),
            Err(EvalError::DuplicateSystem("dup".into()))
        );
        let mut story = item("s", &["a", "b"]);
        story.granularity = Granularity::Story;
        story.source_text = "one\n\ntwo\n\nthree".into();
        assert_eq!(create_session(&[story], "ev", 0), Err(EvalError::StoryTooLong("s".into())));
    }

    #[test]
    fn likert_range() {
        assert_eq!(likert(4), Ok(4));
        assert_eq!(likert(0), Ok(0));
        assert_eq!(likert(5), Err(EvalError::InvalidLikert(5)));
        assert_eq!(likert(-1), Err(EvalError::InvalidLikert(-1)));
        assert!(EvalError::InvalidLikert(5).to_string().contains("invalid Likert value"));
    }

    #[test]
    fn blind_item_hides_systems() {
        let items = [item("i1", &["SYSTEM_ALPHA", "SYSTEM_BETA"])];
        let s = create_session(&items, "ev", 3).unwrap();
        let view = BlindItem::new(&s, &s.items[0], &items[0]);
        let json = serde_json::to_string(&view).unwrap();
        assert!(!json.contains("SYSTEM_ALPHA") && !json.contains("SYSTEM_BETA"));
        assert!(!json.contains("permutation") && !json.contains("seed"));
        let mut shown = view.outputs.clone();
        shown.sort();
        assert_eq!(shown, vec!["output 0 for i1", "output 1 for i1"]);
    }
}
