//! Exact and near-duplicate sentence removal.
//!
//! Both passes are stable: the first occurrence survives and the input order
//! of survivors is preserved. Callers shard by language and run each shard
//! through its own deduper.

use std::collections::HashMap;

use super::minhash::{MinHasher, Signature};
use super::Sentence;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DedupError {
    #[error("near-duplicate threshold must be in (0, 1], got {0}")]
    Threshold(f64),
}

/// Streaming exact deduper keyed on content hash, with full-text comparison
/// on hash collisions.
#[derive(Debug, Default)]
pub struct ExactDeduper {
    seen: HashMap<u64, Vec<String>>,
}

impl ExactDeduper {
    pub fn new() -> Self {
        Self::default()
    }

    /// True when `s` is new (and records it).
    pub fn insert(&mut self, s: &Sentence) -> bool {
        let bucket = self.seen.entry(s.content_hash).or_default();
        if bucket.iter().any(|t| *t == s.text) {
            return false;
        }
        bucket.push(s.text.clone());
        true
    }
}

pub fn dedup_exact(sentences: Vec<Sentence>) -> Vec<Sentence> {
    let mut d = ExactDeduper::new();
    sentences.into_iter().filter(|s| d.insert(s)).collect()
}

/// Near-duplicate filter over MinHash signatures.
///
/// A sentence is dropped when its estimated Jaccard similarity with any
/// retained sentence reaches the threshold. Candidates come from an LSH band
/// index whose band width is chosen so that any pair reaching the threshold
/// must agree on at least one whole band; the lookup is therefore exact with
/// respect to the estimator, not an approximation of the full scan.
#[derive(Debug)]
pub struct NearDeduper {
    hasher: MinHasher,
    min_matches: usize,
    rows: usize,
    bands: Vec<HashMap<Vec<u64>, Vec<usize>>>,
    retained: Vec<Signature>,
}

impl NearDeduper {
    pub fn new(threshold: f64) -> Result<Self, DedupError> {
        Self::with_hasher(threshold, MinHasher::default())
    }

    pub fn with_hasher(threshold: f64, hasher: MinHasher) -> Result<Self, DedupError> {
        if !(threshold > 0.0 && threshold <= 1.0) {
            return Err(DedupError::Threshold(threshold));
        }
        let k = hasher.permutations();
        let min_matches = (0..=k)
            .find(|&m| m as f64 / k as f64 >= threshold)
            .unwrap_or(k);
        let max_mismatches = k - min_matches;
        // floor(k / rows) >= max_mismatches + 1 bands, so a qualifying pair
        // leaves at least one band untouched by mismatches
        let rows = (k / (max_mismatches + 1)).max(1);
        let band_count = k / rows;
        Ok(Self {
            hasher,
            min_matches,
            rows,
            bands: vec![HashMap::new(); band_count],
            retained: Vec::new(),
        })
    }

    /// True when `text` is kept (and records it). Texts shorter than one
    /// shingle are always kept.
    pub fn insert(&mut self, text: &str) -> bool {
        let Some(sig) = self.hasher.signature(text) else {
            return true;
        };
        let mut checked = Vec::new();
        for (b, band) in self.bands.iter().enumerate() {
            let key = &sig.0[b * self.rows..(b + 1) * self.rows];
            if let Some(ids) = band.get(key) {
                for &id in ids {
                    if checked.contains(&id) {
                        continue;
                    }
                    checked.push(id);
                    if self.retained[id].matches(&sig) >= self.min_matches {
                        return false;
                    }
                }
            }
        }
        let id = self.retained.len();
        for (b, band) in self.bands.iter_mut().enumerate() {
            let key = sig.0[b * self.rows..(b + 1) * self.rows].to_vec();
            band.entry(key).or_default().push(id);
        }
        self.retained.push(sig);
        true
    }
}

pub fn dedup_near(sentences: Vec<Sentence>, threshold: f64) -> Result<Vec<Sentence>, DedupError> {
    let mut d = NearDeduper::new(threshold)?;
    Ok(sentences.into_iter().filter(|s| d.insert(&s.text)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::Lang;

    fn sents(texts: &[&str]) -> Vec<Sentence> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| Sentence::new("d", i, t, Lang::En).unwrap())
            .collect()
    }

    fn texts(s: &[Sentence]) -> Vec<&str> {
        s.iter().map(|s| s.text.as_str()).collect()
    }

    #[test]
    fn exact_keeps_first() {
        assert_eq!(texts(&dedup_exact(sents(&["a", "b", "a"]))), vec!["a", "b"]);
        assert_eq!(texts(&dedup_exact(sents(&["a"]))), vec!["a"]);
        let many = vec!["same"; 1000];
        assert_eq!(dedup_exact(sents(&many)).len(), 1);
    }

    #[test]
    fn exact_resolves_forced_collisions() {
        let mut a = Sentence::new("d", 0, "first", Lang::En).unwrap();
        let mut b = Sentence::new("d", 1, "second", Lang::En).unwrap();
        a.content_hash = 42;
        b.content_hash = 42;
        assert_eq!(dedup_exact(vec![a, b]).len(), 2);
    }

    #[test]
    fn near_identical_dropped() {
        let out = dedup_near(sents(&["a longer sentence here", "a longer sentence here"]), 0.8).unwrap();
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn near_disjoint_kept() {
        let out = dedup_near(sents(&["aaaaaaaaaaaa", "bbbbbbbbbbbb"]), 0.8).unwrap();
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn near_short_exempt() {
        let out = dedup_near(sents(&["abcd", "abcd"]), 0.8).unwrap();
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn threshold_validated() {
        assert!(dedup_near(vec![], 0.0).is_err());
        assert!(dedup_near(vec![], 1.5).is_err());
        assert!(dedup_near(vec![], f64::NAN).is_err());
        assert!(dedup_near(vec![], 1.0).is_ok());
    }

    #[test]
    fn banded_lookup_matches_full_scan() {
        // every threshold: the index must agree with a brute-force scan over
        // the retained signatures
        let corpus: Vec<String> = (0..120)
            .map(|i| format!("shared prefix text {} {}", i % 7, "x".repeat(i % 5)))
            .collect();
        for t in [0.1, 0.3, 0.5, 0.8, 0.95, 1.0] {
            let hasher = MinHasher::default();
            let mut d = NearDeduper::with_hasher(t, hasher.clone()).unwrap();
            let mut kept: Vec<Signature> = Vec::new();
            for text in &corpus {
                let sig = hasher.signature(text).unwrap();
                let scan_keep = kept.iter().all(|k| k.jaccard(&sig) < t);
                assert_eq!(d.insert(text), scan_keep, "threshold {t}: {text}");
                if scan_keep {
                    kept.push(sig);
                }
            }
        }
    }
}
