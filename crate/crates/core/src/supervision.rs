//! Distant labels for paraphrase entries from event-cluster annotations,
//! plus aggregation of crowd validation votes.
//!
//! A lemma pair is positive when both lemmas occur in one event cluster, and
//! negative when they occur in different clusters of the same topic and are
//! not positive anywhere.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{lemma_pair, Corpus, Span};
use crate::error::{Error, Result};
use crate::features::{csv_error, parse_bool, LabelRecord, Split};
use crate::io::read_jsonl;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedMention {
    pub doc: String,
    pub lemma: String,
    pub span: Span,
    /// Part-of-speech flag: the mention is headed by a verb.
    #[serde(default)]
    pub verbal: bool,
}

impl AnnotatedMention {
    pub fn id(&self) -> String {
        mention_id(&self.doc, self.span)
    }
}

/// Canonical mention id `doc:start-end`.
pub fn mention_id(doc: &str, span: Span) -> String {
    format!("{doc}:{}-{}", span.start, span.end)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedCluster {
    pub id: String,
    pub mentions: Vec<AnnotatedMention>,
}

/// One topic of `annotations.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventClusterAnnotation {
    pub topic: String,
    pub clusters: Vec<AnnotatedCluster>,
}

impl EventClusterAnnotation {
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for c in &self.clusters {
            for m in &c.mentions {
                if !seen.insert(m.id()) {
                    return Err(Error::InvalidInput(format!(
                        "topic {}: mention {} in more than one cluster",
                        self.topic,
                        m.id()
                    )));
                }
            }
        }
        Ok(())
    }

    fn cluster_lemmas(&self) -> Vec<BTreeSet<String>> {
        self.clusters
            .iter()
            .map(|c| c.mentions.iter().map(|m| m.lemma.trim().to_lowercase()).collect())
            .collect()
    }
}

pub fn load_annotations(path: &Path) -> Result<Vec<EventClusterAnnotation>> {
    let topics: Vec<EventClusterAnnotation> = read_jsonl(path)?;
    for t in &topics {
        t.validate()?;
    }
    Ok(topics)
}

/// All unordered pairs of distinct lemmas sharing an event cluster.
pub fn positive_lemma_pairs(annotations: &[EventClusterAnnotation]) -> BTreeSet<(String, String)> {
    let mut out = BTreeSet::new();
    for topic in annotations {
        for lemmas in topic.cluster_lemmas() {
            let lemmas: Vec<&String> = lemmas.iter().collect();
            for (i, a) in lemmas.iter().enumerate() {
                for b in &lemmas[i + 1..] {
                    out.insert(lemma_pair(a, b));
                }
            }
        }
    }
    out
}

/// Pairs of distinct lemmas from different clusters of one topic, excluding
/// every positive pair.
pub fn negative_lemma_pairs(annotations: &[EventClusterAnnotation]) -> BTreeSet<(String, String)> {
    let positives = positive_lemma_pairs(annotations);
    let mut out = BTreeSet::new();
    for topic in annotations {
        let clusters = topic.cluster_lemmas();
        for (i, ci) in clusters.iter().enumerate() {
            for cj in &clusters[i + 1..] {
                for a in ci {
                    for b in cj {
                        if a != b {
                            let key = lemma_pair(a, b);
                            if !positives.contains(&key) {
                                out.insert(key);
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

fn entries_with_keys(corpus: &Corpus, keys: &BTreeSet<(String, String)>) -> BTreeSet<String> {
    corpus
        .entries()
        .iter()
        .filter(|e| keys.contains(&e.lemma_key()))
        .map(|e| e.id.clone())
        .collect()
}

pub fn derive_positives(annotations: &[EventClusterAnnotation], corpus: &Corpus) -> BTreeSet<String> {
    entries_with_keys(corpus, &positive_lemma_pairs(annotations))
}

pub fn derive_negatives(annotations: &[EventClusterAnnotation], corpus: &Corpus) -> BTreeSet<String> {
    entries_with_keys(corpus, &negative_lemma_pairs(annotations))
}

/// One crowd vote (`judgments.csv`: `entry_id,instantiation,worker,vote`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgment {
    pub entry_id: String,
    pub instantiation: u8,
    pub worker: String,
    pub vote: bool,
}

pub const MAX_INSTANTIATIONS: u8 = 3;

/// Majority vote per argument instantiation; the entry is positive if any
/// instantiation is.
pub fn aggregate_judgments(judgments: &[Judgment]) -> Result<bool> {
    let mut per_inst: BTreeMap<u8, (usize, usize)> = BTreeMap::new();
    for j in judgments {
        if j.instantiation >= MAX_INSTANTIATIONS {
            return Err(Error::InvalidInput(format!(
                "entry {}: instantiation {} out of range",
                j.entry_id, j.instantiation
            )));
        }
        let slot = per_inst.entry(j.instantiation).or_default();
        slot.0 += 1;
        slot.1 += usize::from(j.vote);
    }
    let mut positive = false;
    for (inst, (workers, yes)) in per_inst {
        if workers % 2 == 0 {
            return Err(Error::InvalidInput(format!(
                "instantiation {inst} has an even number of votes ({workers})"
            )));
        }
        positive |= 2 * yes > workers;
    }
    Ok(positive)
}

pub fn read_judgments(path: &Path) -> Result<Vec<Judgment>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = i + 2;
        if rec.len() < 4 {
            return Err(Error::parse(path, line, "expected 4 columns"));
        }
        out.push(Judgment {
            entry_id: rec[0].to_string(),
            instantiation: rec[1]
                .trim()
                .parse()
                .map_err(|e| Error::parse(path, line, format!("instantiation: {e}")))?,
            worker: rec[2].to_string(),
            vote: parse_bool(&rec[3]).map_err(|m| Error::parse(path, line, m))?,
        });
    }
    Ok(out)
}

/// `splits.csv`: `id,split`.
pub fn read_splits(path: &Path) -> Result<BTreeMap<String, Split>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut out = BTreeMap::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let split = rec
            .get(1)
            .ok_or_else(|| Error::parse(path, i + 2, "missing split column"))?
            .parse()
            .map_err(|e| Error::parse(path, i + 2, e))?;
        out.insert(rec[0].to_string(), split);
    }
    Ok(out)
}

pub fn write_judgments(path: &Path, judgments: &[Judgment]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["entry_id", "instantiation", "worker", "vote"])
        .map_err(|e| csv_error(path, e))?;
    for j in judgments {
        let inst = j.instantiation.to_string();
        w.write_record([j.entry_id.as_str(), &inst, &j.worker, if j.vote { "1" } else { "0" }])
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_splits(path: &Path, splits: &BTreeMap<String, Split>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["id", "split"]).map_err(|e| csv_error(path, e))?;
    for (id, s) in splits {
        w.write_record([id.as_str(), s.as_str()]).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Distant labels, overridden by aggregated crowd votes where present.
/// Entries absent from `splits` go to the training split. Output is sorted by id.
pub fn derive_labels(
    annotations: &[EventClusterAnnotation],
    corpus: &Corpus,
    judgments: &[Judgment],
    splits: &BTreeMap<String, Split>,
) -> Result<Vec<LabelRecord>> {
    let mut labels: BTreeMap<String, bool> = BTreeMap::new();
    for id in derive_positives(annotations, corpus) {
        labels.insert(id, true);
    }
    for id in derive_negatives(annotations, corpus) {
        labels.insert(id, false);
    }
    let mut grouped: BTreeMap<&str, Vec<Judgment>> = BTreeMap::new();
    for j in judgments {
        grouped.entry(j.entry_id.as_str()).or_default().push(j.clone());
    }
    for (id, js) in grouped {
        if corpus.entry(id).is_none() {
            return Err(Error::Integrity(format!("judgments for unknown entry {id}")));
        }
        if let Some(label) = labels.get_mut(id) {
            *label = aggregate_judgments(&js)?;
        }
    }
    Ok(labels
        .into_iter()
        .map(|(id, label)| LabelRecord {
            split: splits.get(&id).copied().unwrap_or(Split::Train),
            id,
            label,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn topic(name: &str, clusters: &[&[&str]]) -> EventClusterAnnotation {
        let mut pos = 0;
        EventClusterAnnotation {
            topic: name.into(),
            clusters: clusters
                .iter()
                .enumerate()
                .map(|(ci, lemmas)| AnnotatedCluster {
                    id: format!("{name}-{ci}"),
                    mentions: lemmas
                        .iter()
                        .map(|l| {
                            pos += 1;
                            AnnotatedMention {
                                doc: format!("{name}-doc"),
                                lemma: l.to_string(),
                                span: Span::new(pos, pos + 1),
                                verbal: true,
                            }
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    fn votes(per: &[[u8; 3]]) -> Vec<Judgment> {
        per.iter()
            .enumerate()
            .flat_map(|(i, vs)| {
                vs.iter().enumerate().map(move |(w, &v)| Judgment {
                    entry_id: "e".into(),
                    instantiation: i as u8,
                    worker: format!("w{w}"),
                    vote: v == 1,
                })
            })
            .collect()
    }

    #[test]
    fn singleton_cluster_yields_nothing() {
        assert!(positive_lemma_pairs(&[topic("t", &[&["say"]])]).is_empty());
    }

    #[test]
    fn cluster_of_k_lemmas_gives_k_choose_2() {
        let t = topic("t", &[&["a", "b", "c", "d", "e"]]);
        assert_eq!(positive_lemma_pairs(&[t]).len(), 10);
    }

    #[test]
    fn positive_beats_negative_across_topics() {
        let a = topic("A", &[&["hit", "strike"]]);
        let b = topic("B", &[&["hit"], &["strike"]]);
        let neg = negative_lemma_pairs(&[a, b]);
        assert!(!neg.contains(&lemma_pair("hit", "strike")));
    }

    #[test]
    fn different_topics_only_give_no_label() {
        let a = topic("A", &[&["hit"]]);
        let b = topic("B", &[&["strike"]]);
        assert!(positive_lemma_pairs(&[a.clone(), b.clone()]).is_empty());
        assert!(negative_lemma_pairs(&[a, b]).is_empty());
    }

    #[test]
    fn aggregation_examples() {
        assert!(aggregate_judgments(&votes(&[[1, 1, 0], [0, 0, 0], [0, 0, 0]])).unwrap());
        assert!(!aggregate_judgments(&votes(&[[0, 1, 0], [0, 0, 0], [0, 0, 1]])).unwrap());
        assert!(!aggregate_judgments(&votes(&[[1, 0, 0], [1, 0, 0], [1, 0, 0]])).unwrap());
        let mut even = votes(&[[1, 1, 0]]);
        even.pop();
        assert!(aggregate_judgments(&even).is_err());
    }

    #[test]
    fn overlapping_clusters_are_rejected() {
        let mut t = topic("t", &[&["a"], &["b"]]);
        t.clusters[1].mentions[0].span = t.clusters[0].mentions[0].span;
        assert!(t.validate().is_err());
    }
}
