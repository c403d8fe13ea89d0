//! Named Entity Coverage (NEC) between the two tweets of a support pair.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, ParaphraseEntry};
use crate::error::{Error, Result};
use crate::evaluation::tune_accuracy_threshold;
use crate::io::read_jsonl;

/// Threshold used when no labeled tuning set is supplied.
pub const DEFAULT_NEC_THRESHOLD: f64 = 0.26;

/// Maximum fraction of either entity set covered by the intersection.
/// Zero when either set is empty.
pub fn nec(ne1: &BTreeSet<String>, ne2: &BTreeSet<String>) -> f64 {
    if ne1.is_empty() || ne2.is_empty() {
        return 0.0;
    }
    let shared = ne1.intersection(ne2).count() as f64;
    (shared / ne1.len() as f64).max(shared / ne2.len() as f64)
}

/// NEC of a support pair's two tweets, 0 if either tweet is unknown.
pub fn pair_nec(corpus: &Corpus, left: &str, right: &str) -> f64 {
    match (corpus.tweet(left), corpus.tweet(right)) {
        (Some(a), Some(b)) => nec(&a.named_entities, &b.named_entities),
        _ => 0.0,
    }
}

/// Manually labeled tweet pair for threshold tuning (`nec_labels.jsonl`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NecLabeledPair {
    pub left: String,
    pub right: String,
    pub label: bool,
}

pub fn load_nec_labels(path: &Path) -> Result<Vec<NecLabeledPair>> {
    read_jsonl(path)
}

/// Accuracy-maximizing threshold over labeled NEC scores. Candidates are
/// 0, 1 and midpoints between adjacent distinct scores; a pair is predicted
/// coreferring when its score is at least the threshold. Ties go to the
/// smaller threshold.
pub fn tune_threshold_scores(scores: &[f64], labels: &[bool]) -> Result<f64> {
    tune_accuracy_threshold(scores, labels, 0.0, 1.0)
}

pub fn tune_threshold(corpus: &Corpus, pairs: &[NecLabeledPair]) -> Result<f64> {
    let mut scores = Vec::with_capacity(pairs.len());
    for p in pairs {
        if corpus.tweet(&p.left).is_none() || corpus.tweet(&p.right).is_none() {
            return Err(Error::Integrity(format!(
                "labeled pair ({}, {}) cites an unknown tweet",
                p.left, p.right
            )));
        }
        scores.push(pair_nec(corpus, &p.left, &p.right));
    }
    let labels: Vec<bool> = pairs.iter().map(|p| p.label).collect();
    tune_threshold_scores(&scores, &labels)
}

/// Per-support-pair NEC scores of an entry, in support-pair order.
pub fn entry_nec_scores(corpus: &Corpus, entry: &ParaphraseEntry) -> Vec<f64> {
    entry
        .support_pairs()
        .map(|p| pair_nec(corpus, &p.left, &p.right))
        .collect()
}

/// Count of support pairs with NEC ≥ `threshold`, and their mean NEC
/// (0 when none qualifies).
pub fn nec_features_from_scores(scores: &[f64], threshold: f64) -> (usize, f64) {
    let above: Vec<f64> = scores.iter().copied().filter(|&s| s >= threshold).collect();
    if above.is_empty() {
        return (0, 0.0);
    }
    (above.len(), above.iter().sum::<f64>() / above.len() as f64)
}

pub fn nec_features(corpus: &Corpus, entry: &ParaphraseEntry, threshold: f64) -> (usize, f64) {
    nec_features_from_scores(&entry_nec_scores(corpus, entry), threshold)
}
