//! Clustering decisions of an external coreference model over the mentions
//! of each support pair, and the categorical match features derived from them.
//!
//! Each support pair contributes two event mentions (`pred_L`, `pred_R`) and
//! four entity mentions (`a0_L`, `a1_L`, `a0_R`, `a1_R`). A decision is a
//! partition of each group.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, ParaphraseEntry};
use crate::error::{Error, Result};
use crate::io::{read_jsonl, write_jsonl};

pub const PRED_L: &str = "pred_L";
pub const PRED_R: &str = "pred_R";
pub const A0_L: &str = "a0_L";
pub const A1_L: &str = "a1_L";
pub const A0_R: &str = "a0_R";
pub const A1_R: &str = "a1_R";

const EVENT_MENTIONS: [&str; 2] = [PRED_L, PRED_R];
const ENTITY_MENTIONS: [&str; 4] = [A0_L, A1_L, A0_R, A1_R];

/// One line of `decisions.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairDecision {
    pub support_pair: String,
    pub event_clusters: Vec<Vec<String>>,
    pub entity_clusters: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventMatch {
    Perfect,
    NoMatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EntityMatch {
    Perfect,
    Reversed,
    NoMatch,
}

/// Map each expected mention to its cluster index, checking the partition
/// covers exactly `expected`, each mention once.
fn cluster_of(clusters: &[Vec<String>], expected: &[&str], what: &str) -> Result<BTreeMap<String, usize>> {
    let mut of = BTreeMap::new();
    for (ci, cluster) in clusters.iter().enumerate() {
        if cluster.is_empty() {
            return Err(Error::InvalidInput(format!("empty {what} cluster")));
        }
        for m in cluster {
            if !expected.contains(&m.as_str()) {
                return Err(Error::InvalidInput(format!("unknown {what} mention {m:?}")));
            }
            if of.insert(m.clone(), ci).is_some() {
                return Err(Error::InvalidInput(format!("{what} mention {m:?} appears twice")));
            }
        }
    }
    if let Some(missing) = expected.iter().find(|m| !of.contains_key(**m)) {
        return Err(Error::InvalidInput(format!("{what} partition misses {missing:?}")));
    }
    Ok(of)
}

impl PairDecision {
    pub fn validate(&self) -> Result<()> {
        cluster_of(&self.event_clusters, &EVENT_MENTIONS, "event")?;
        cluster_of(&self.entity_clusters, &ENTITY_MENTIONS, "entity")?;
        Ok(())
    }
}

pub fn event_match(d: &PairDecision) -> Result<EventMatch> {
    let of = cluster_of(&d.event_clusters, &EVENT_MENTIONS, "event")?;
    Ok(if of[PRED_L] == of[PRED_R] {
        EventMatch::Perfect
    } else {
        EventMatch::NoMatch
    })
}

/// Perfect: both a0 arguments share one cluster and both a1 arguments share
/// another. Reversed: some a0 argument is clustered with the a1 argument of
/// the other tweet. Checked in that order.
pub fn entity_match(d: &PairDecision) -> Result<EntityMatch> {
    let of = cluster_of(&d.entity_clusters, &ENTITY_MENTIONS, "entity")?;
    let same = |a: &str, b: &str| of[a] == of[b];
    if same(A0_L, A0_R) && same(A1_L, A1_R) && !same(A0_L, A1_L) {
        return Ok(EntityMatch::Perfect);
    }
    if same(A0_L, A1_R) || same(A0_R, A1_L) {
        return Ok(EntityMatch::Reversed);
    }
    Ok(EntityMatch::NoMatch)
}

/// Decisions keyed by support-pair id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DecisionStore {
    by_pair: BTreeMap<String, PairDecision>,
}

impl DecisionStore {
    pub fn new(decisions: Vec<PairDecision>) -> Result<Self> {
        let mut by_pair = BTreeMap::new();
        for d in decisions {
            d.validate()
                .map_err(|e| Error::InvalidInput(format!("decision for {}: {e}", d.support_pair)))?;
            let key = d.support_pair.clone();
            if by_pair.insert(key.clone(), d).is_some() {
                return Err(Error::Integrity(format!("two decisions for support pair {key}")));
            }
        }
        Ok(DecisionStore { by_pair })
    }

    pub fn load(path: &Path) -> Result<Self> {
        DecisionStore::new(read_jsonl(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let items: Vec<&PairDecision> = self.by_pair.values().collect();
        write_jsonl(path, &items)
    }

    pub fn get(&self, support_pair: &str) -> Option<&PairDecision> {
        self.by_pair.get(support_pair)
    }

    pub fn len(&self) -> usize {
        self.by_pair.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_pair.is_empty()
    }

    /// Fallback decider for pipelines without model output: predicates
    /// corefer iff their case-folded surface text is identical; arguments
    /// are clustered by case-folded surface text.
    pub fn lexical_identity(corpus: &Corpus) -> Self {
        let mut by_pair = BTreeMap::new();
        for entry in corpus.entries() {
            for p in entry.support_pairs() {
                let (Some(l), Some(r)) = (corpus.tweet(&p.left), corpus.tweet(&p.right)) else {
                    continue;
                };
                let event_clusters = group_by_text(&[
                    (PRED_L, l.predicate_text()),
                    (PRED_R, r.predicate_text()),
                ]);
                let entity_clusters = group_by_text(&[
                    (A0_L, l.arg0_text()),
                    (A1_L, l.arg1_text()),
                    (A0_R, r.arg0_text()),
                    (A1_R, r.arg1_text()),
                ]);
                by_pair.insert(
                    p.id.clone(),
                    PairDecision {
                        support_pair: p.id.clone(),
                        event_clusters,
                        entity_clusters,
                    },
                );
            }
        }
        DecisionStore { by_pair }
    }
}

fn group_by_text(mentions: &[(&str, String)]) -> Vec<Vec<String>> {
    let mut groups: Vec<(String, Vec<String>)> = Vec::new();
    for (name, text) in mentions {
        let key = text.to_lowercase();
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, g)) => g.push(name.to_string()),
            None => groups.push((key, vec![name.to_string()])),
        }
    }
    groups.into_iter().map(|(_, g)| g).collect()
}

/// Per-entry category counts over support pairs with a decision.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CorefCounts {
    pub event_perfect: usize,
    pub event_no_match: usize,
    pub entity_perfect: usize,
    pub entity_reversed: usize,
    pub entity_no_match: usize,
}

impl CorefCounts {
    pub fn as_array(&self) -> [usize; 5] {
        [
            self.event_perfect,
            self.event_no_match,
            self.entity_perfect,
            self.entity_reversed,
            self.entity_no_match,
        ]
    }
}

/// Support pairs without a decision count toward no category.
pub fn coref_feature_counts(entry: &ParaphraseEntry, decisions: &DecisionStore) -> CorefCounts {
    let mut c = CorefCounts::default();
    for p in entry.support_pairs() {
        let Some(d) = decisions.get(&p.id) else {
            continue;
        };
        // Stored decisions were validated on insertion.
        match event_match(d) {
            Ok(EventMatch::Perfect) => c.event_perfect += 1,
            Ok(EventMatch::NoMatch) => c.event_no_match += 1,
            Err(_) => {}
        }
        match entity_match(d) {
            Ok(EntityMatch::Perfect) => c.entity_perfect += 1,
            Ok(EntityMatch::Reversed) => c.entity_reversed += 1,
            Ok(EntityMatch::NoMatch) => c.entity_no_match += 1,
            Err(_) => {}
        }
    }
    c
}

/// Support pairs with NEC ≥ `threshold` whose predicates were clustered together.
pub fn perfectly_clustered_with_nec(
    entry: &ParaphraseEntry,
    nec_scores: &[f64],
    decisions: &DecisionStore,
    threshold: f64,
) -> usize {
    entry
        .support_pairs()
        .zip(nec_scores)
        .filter(|(p, &s)| {
            s >= threshold
                && decisions
                    .get(&p.id)
                    .is_some_and(|d| matches!(event_match(d), Ok(EventMatch::Perfect)))
        })
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decision(events: &[&[&str]], entities: &[&[&str]]) -> PairDecision {
        let conv = |cs: &[&[&str]]| {
            cs.iter()
                .map(|c| c.iter().map(|s| s.to_string()).collect())
                .collect()
        };
        PairDecision {
            support_pair: "sp".into(),
            event_clusters: conv(events),
            entity_clusters: conv(entities),
        }
    }

    const ALL_SINGLE: &[&[&str]] = &[&[A0_L], &[A1_L], &[A0_R], &[A1_R]];

    #[test]
    fn event_outcomes() {
        let d = decision(&[&[PRED_L, PRED_R]], ALL_SINGLE);
        assert_eq!(event_match(&d).unwrap(), EventMatch::Perfect);
        let d = decision(&[&[PRED_L], &[PRED_R]], ALL_SINGLE);
        assert_eq!(event_match(&d).unwrap(), EventMatch::NoMatch);
        let d = decision(&[&[PRED_L]], ALL_SINGLE);
        assert!(event_match(&d).is_err());
    }

    #[test]
    fn entity_outcomes() {
        let ev: &[&[&str]] = &[&[PRED_L, PRED_R]];
        let d = decision(ev, &[&[A0_L, A0_R], &[A1_L, A1_R]]);
        assert_eq!(entity_match(&d).unwrap(), EntityMatch::Perfect);
        let d = decision(ev, &[&[A0_L, A1_R], &[A1_L], &[A0_R]]);
        assert_eq!(entity_match(&d).unwrap(), EntityMatch::Reversed);
        let d = decision(ev, ALL_SINGLE);
        assert_eq!(entity_match(&d).unwrap(), EntityMatch::NoMatch);
        // Everything merged: not a perfect split, but a0 meets a1 across tweets.
        let d = decision(ev, &[&[A0_L, A1_L, A0_R, A1_R]]);
        assert_eq!(entity_match(&d).unwrap(), EntityMatch::Reversed);
    }

    #[test]
    fn malformed_partitions() {
        let ev: &[&[&str]] = &[&[PRED_L, PRED_R]];
        assert!(entity_match(&decision(ev, &[&[A0_L, A0_L], &[A1_L, A1_R, A0_R]])).is_err());
        assert!(entity_match(&decision(ev, &[&[A0_L, "x"], &[A1_L, A1_R, A0_R]])).is_err());
        assert!(entity_match(&decision(ev, &[&[A0_L, A1_L, A1_R]])).is_err());
        assert!(DecisionStore::new(vec![decision(&[&[PRED_L]], ALL_SINGLE)]).is_err());
    }
}
