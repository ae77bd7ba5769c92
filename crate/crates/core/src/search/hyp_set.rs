use std::collections::BTreeMap;

use crate::types::{rank_by_normalized, rank_by_score, Hypothesis, LogProb, TokenId};

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Entry {
    pub score: LogProb,
    /// Non-blank symbols this hypothesis has emitted within the current frame.
    pub emitted: usize,
}

/// Hypotheses keyed by label sequence. Inserting an existing sequence
/// merges the two scores with log-sum-exp.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HypothesisSet {
    entries: BTreeMap<Vec<TokenId>, Entry>,
}

impl HypothesisSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// The set holding only the empty sequence with probability one.
    pub fn root() -> Self {
        let mut set = Self::new();
        set.insert(Vec::new(), LogProb::ONE);
        set
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, labels: Vec<TokenId>, score: LogProb) {
        self.insert_counted(labels, score, 0);
    }

    pub(crate) fn insert_counted(&mut self, labels: Vec<TokenId>, score: LogProb, emitted: usize) {
        self.entries
            .entry(labels)
            .and_modify(|e| {
                e.score = e.score.log_add(score);
                e.emitted = e.emitted.min(emitted);
            })
            .or_insert(Entry { score, emitted });
    }

    pub fn score(&self, labels: &[TokenId]) -> Option<LogProb> {
        self.entries.get(labels).map(|e| e.score)
    }

    pub(crate) fn set_score(&mut self, labels: &[TokenId], score: LogProb) {
        if let Some(e) = self.entries.get_mut(labels) {
            e.score = score;
        }
    }

    pub(crate) fn remove(&mut self, labels: &[TokenId]) -> Option<Entry> {
        self.entries.remove(labels)
    }

    pub fn contains(&self, labels: &[TokenId]) -> bool {
        self.entries.contains_key(labels)
    }

    /// Most probable entry by raw score with the deterministic tie-break.
    pub fn best(&self) -> Option<(&[TokenId], LogProb)> {
        self.entries
            .iter()
            .map(|(k, e)| (k.as_slice(), e.score))
            .min_by(|a, b| rank_by_score(*a, *b))
    }

    /// Highest raw score; negative infinity when empty.
    pub fn max_score(&self) -> LogProb {
        self.entries
            .values()
            .map(|e| e.score)
            .fold(LogProb::ZERO, |a, b| if b.0 > a.0 { b } else { a })
    }

    /// Number of entries strictly more probable than `score`.
    pub fn count_above(&self, score: LogProb) -> usize {
        self.entries
            .values()
            .filter(|e| e.score.0 > score.0)
            .count()
    }

    /// Keeps the `width` most probable entries.
    pub fn truncate(&mut self, width: usize) {
        if self.entries.len() <= width {
            return;
        }
        let mut ranked: Vec<(Vec<TokenId>, Entry)> =
            std::mem::take(&mut self.entries).into_iter().collect();
        ranked.sort_by(|a, b| rank_by_score((&a.0, a.1.score), (&b.0, b.1.score)));
        ranked.truncate(width);
        self.entries = ranked.into_iter().collect();
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[TokenId], LogProb)> {
        self.entries.iter().map(|(k, e)| (k.as_slice(), e.score))
    }

    /// Entries in label-sequence order.
    pub fn to_hypotheses(&self) -> Vec<Hypothesis> {
        self.iter()
            .map(|(labels, score)| Hypothesis {
                labels: labels.to_vec(),
                score,
            })
            .collect()
    }

    /// Entries sorted best-first by normalized score.
    pub fn ranked_normalized(&self) -> Vec<Hypothesis> {
        let mut v = self.to_hypotheses();
        v.sort_by(rank_by_normalized);
        v
    }

    /// Entries sorted best-first by raw score.
    pub fn ranked_raw(&self) -> Vec<Hypothesis> {
        let mut v = self.to_hypotheses();
        v.sort_by(|a, b| rank_by_score((&a.labels, a.score), (&b.labels, b.score)));
        v
    }
}
