use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::report::{unblind_and_aggregate, Aggregate};
use super::{create_session, likert, BlindItem, BlindSession, EvalDataset, EvalError, EvalItem, ScoreRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum NextItem {
    Item { item: BlindItem, scored: usize, total: usize },
    Done { scored: usize, total: usize },
}

/// Items, sessions and scores for one evaluation campaign.
///
/// The effective score for `(session, item, position)` is the last one
/// recorded; every submission is also kept in an append-only audit log.
#[derive(Debug, Clone, Default)]
pub struct EvalStore {
    items: Vec<EvalItem>,
    item_index: HashMap<String, usize>,
    sessions: Vec<BlindSession>,
    session_index: HashMap<String, usize>,
    current: BTreeMap<(String, String, usize), ScoreRecord>,
    audit: Vec<ScoreRecord>,
    base_seed: u64,
}

impl EvalStore {
    /// `base_seed` determines the shuffle seed of sessions created on demand.
    pub fn new(items: Vec<EvalItem>, base_seed: u64) -> Result<Self, EvalError> {
        let mut item_index = HashMap::new();
        for (k, item) in items.iter().enumerate() {
            item.validate()?;
            if item_index.insert(item.item_id.clone(), k).is_some() {
                return Err(EvalError::DuplicateItem(item.item_id.clone()));
            }
        }
        Ok(Self {
            items,
            item_index,
            base_seed,
            ..Default::default()
        })
    }

    /// Rebuild a store, replaying the archived score log in order.
    pub fn from_dataset(ds: EvalDataset, base_seed: u64) -> Result<Self, EvalError> {
        let mut store = Self::new(ds.items, base_seed)?;
        for s in ds.sessions {
            store.add_session(s)?;
        }
        for r in ds.scores {
            store.record_score(&r.session_id, &r.item_id, r.position, r.value as i64, r.timestamp)?;
        }
        Ok(store)
    }

    pub fn to_dataset(&self) -> EvalDataset {
        EvalDataset {
            items: self.items.clone(),
            sessions: self.sessions.clone(),
            scores: self.audit.clone(),
        }
    }

    pub fn items(&self) -> &[EvalItem] {
        &self.items
    }

    pub fn sessions(&self) -> &[BlindSession] {
        &self.sessions
    }

    pub fn audit_log(&self) -> &[ScoreRecord] {
        &self.audit
    }

    /// Effective scores after last-write-wins.
    pub fn scores(&self) -> Vec<ScoreRecord> {
        self.current.values().cloned().collect()
    }

    pub fn item(&self, item_id: &str) -> Option<&EvalItem> {
        self.item_index.get(item_id).map(|&k| &self.items[k])
    }

    pub fn session(&self, session_id: &str) -> Option<&BlindSession> {
        self.session_index.get(session_id).map(|&k| &self.sessions[k])
    }

    pub fn add_session(&mut self, session: BlindSession) -> Result<(), EvalError> {
        if self.session_index.contains_key(&session.session_id) {
            return Ok(());
        }
        for entry in &session.items {
            let item = self.item(&entry.item_id).ok_or_else(|| EvalError::UnknownItem {
                session: session.session_id.clone(),
                item: entry.item_id.clone(),
            })?;
            let mut seen = HashSet::new();
            if entry.permutation.len() != item.outputs.len()
                || !entry.permutation.iter().all(|&k| k < item.outputs.len() && seen.insert(k))
            {
                return Err(EvalError::BadPosition {
                    item: entry.item_id.clone(),
                    position: entry.permutation.len(),
                    outputs: item.outputs.len(),
                });
            }
        }
        self.session_index.insert(session.session_id.clone(), self.sessions.len());
        self.sessions.push(session);
        Ok(())
    }

    fn evaluator_seed(&self, evaluator_id: &str) -> u64 {
        let mut h = Sha256::new();
        h.update(self.base_seed.to_le_bytes());
        h.update(evaluator_id.as_bytes());
        u64::from_le_bytes(h.finalize()[..8].try_into().unwrap())
    }

    /// The evaluator's session over all items, created on first use.
    pub fn session_for(&mut self, evaluator_id: &str) -> Result<&BlindSession, EvalError> {
        let existing = self.sessions.iter().position(|s| s.evaluator_id == evaluator_id);
        let k = match existing {
            Some(k) => k,
            None => {
                let session = create_session(&self.items, evaluator_id, self.evaluator_seed(evaluator_id))?;
                self.add_session(session)?;
                self.sessions.len() - 1
            }
        };
        Ok(&self.sessions[k])
    }

    fn item_complete(&self, session: &BlindSession, item_id: &str, outputs: usize) -> bool {
        (0..outputs).all(|p| {
            self.current
                .contains_key(&(session.session_id.clone(), item_id.to_string(), p))
        })
    }

    /// First item in the evaluator's session with an unscored position.
    pub fn next_item(&mut self, evaluator_id: &str) -> Result<NextItem, EvalError> {
        let session = self.session_for(evaluator_id)?.clone();
        let total = session.items.len();
        let mut scored = 0;
        let mut next = None;
        for entry in &session.items {
            let item = self.item(&entry.item_id).expect("validated session");
            if self.item_complete(&session, &entry.item_id, item.outputs.len()) {
                scored += 1;
            } else if next.is_none() {
                next = Some(BlindItem::new(&session, entry, item));
            }
        }
        Ok(match next {
            Some(item) => NextItem::Item { item, scored, total },
            None => NextItem::Done { scored, total },
        })
    }

    pub fn record_score(
        &mut self,
        session_id: &str,
        item_id: &str,
        position: usize,
        value: i64,
        timestamp: i64,
    ) -> Result<ScoreRecord, EvalError> {
        let value = likert(value)?;
        let session = self
            .session(session_id)
            .ok_or_else(|| EvalError::UnknownSession(session_id.to_string()))?;
        let entry = session.item(item_id).ok_or_else(|| EvalError::UnknownItem {
            session: session_id.to_string(),
            item: item_id.to_string(),
        })?;
        if position >= entry.permutation.len() {
            return Err(EvalError::BadPosition {
                item: item_id.to_string(),
                position,
                outputs: entry.permutation.len(),
            });
        }
        let rec = ScoreRecord {
            session_id: session_id.to_string(),
            evaluator_id: session.evaluator_id.clone(),
            item_id: item_id.to_string(),
            position,
            value,
            timestamp,
        };
        self.audit.push(rec.clone());
        self.current
            .insert((rec.session_id.clone(), rec.item_id.clone(), position), rec.clone());
        Ok(rec)
    }

    pub fn aggregate(&self) -> Aggregate {
        unblind_and_aggregate(&self.scores(), &self.sessions, &self.items)
    }
}
