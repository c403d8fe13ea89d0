//! Seeded synthetic data: a paraphrase corpus with planted signal for the
//! re-ranker, coreference topics for the pair scorer, and a generic
//! informative-feature classification set.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::coref_decisions::{
    DecisionStore, PairDecision, A0_L, A0_R, A1_L, A1_R, PRED_L, PRED_R,
};
use crate::coref_metrics::Clustering;
use crate::corpus::{lemma_pair, Corpus, CorpusMeta, ParaphraseEntry, Span, SupportPair, TemplateVariant, TweetDoc};
use crate::error::Result;
use crate::features::{FeatureVector, Split, NUM_FEATURES};
use crate::io::write_jsonl;
use crate::pair_scorer::{MentionRecord, ResourceFeatures, ResourceRecord};
use crate::rng::SplitMix64;
use crate::supervision::{
    write_judgments, write_splits, AnnotatedCluster, AnnotatedMention, EventClusterAnnotation, Judgment,
};

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusConfig {
    pub entries: usize,
    pub collection_days: u32,
    pub positive_rate: f64,
    /// Probability that an entry's observed label disagrees with its latent class.
    pub label_noise: f64,
    /// Fraction of labeled entries in the test and dev splits.
    pub test_fraction: f64,
    pub dev_fraction: f64,
    /// Fraction of entries that get crowd judgments.
    pub judged_fraction: f64,
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            entries: 600,
            collection_days: 30,
            positive_rate: 0.4,
            label_noise: 0.1,
            test_fraction: 0.3,
            dev_fraction: 0.1,
            judged_fraction: 0.05,
            seed: 0,
        }
    }
}

pub struct SyntheticCorpus {
    pub corpus: Corpus,
    pub decisions: DecisionStore,
    pub annotations: Vec<EventClusterAnnotation>,
    pub judgments: Vec<Judgment>,
    pub splits: BTreeMap<String, Split>,
    /// Observed (noisy) label of every labeled entry.
    pub labels: BTreeMap<String, bool>,
}

impl SyntheticCorpus {
    /// Writes the corpus files plus `decisions.jsonl`, `annotations.jsonl`,
    /// `judgments.csv` and `splits.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        self.corpus.save(dir)?;
        self.decisions.save(&dir.join("decisions.jsonl"))?;
        write_jsonl(&dir.join("annotations.jsonl"), &self.annotations)?;
        write_judgments(&dir.join("judgments.csv"), &self.judgments)?;
        write_splits(&dir.join("splits.csv"), &self.splits)
    }
}

struct Builder<'a> {
    rng: &'a mut SplitMix64,
    tweets: Vec<TweetDoc>,
    decisions: Vec<PairDecision>,
    days: u32,
}

impl Builder<'_> {
    fn tweet(&mut self, id: String, predicate: &str, day: u32, entities: BTreeSet<String>) -> String {
        let a0 = entities.iter().next().cloned().unwrap_or_else(|| "someone".into());
        let text = format!("{a0} {predicate} something");
        self.tweets.push(TweetDoc {
            id: id.clone(),
            text,
            predicate_span: Span::new(1, 2),
            arg0_span: Span::new(0, 1),
            arg1_span: Span::new(2, 3),
            day,
            named_entities: entities,
            available: self.rng.bernoulli(0.9),
        });
        id
    }

    fn entities(&mut self, prefix: &str, n: usize) -> BTreeSet<String> {
        (0..n)
            .map(|_| format!("{prefix}{}", self.rng.below(1_000_000)))
            .collect()
    }

    fn decision(&mut self, pair: &str, event_same: bool, entity_ok: bool) {
        let event_clusters = if event_same {
            vec![vec![PRED_L.into(), PRED_R.into()]]
        } else {
            vec![vec![PRED_L.into()], vec![PRED_R.into()]]
        };
        let entity_clusters = if entity_ok {
            vec![vec![A0_L.into(), A0_R.into()], vec![A1_L.into(), A1_R.into()]]
        } else {
            vec![vec![A0_L.into()], vec![A1_L.into()], vec![A0_R.into()], vec![A1_R.into()]]
        };
        self.decisions.push(PairDecision {
            support_pair: pair.into(),
            event_clusters,
            entity_clusters,
        });
    }
}

/// A corpus of `config.entries` labeled entries (plus unlabeled context
/// entries that close triangles in the global tweet graph). Positive entries
/// tend to have high entity coverage, connected support graphs, clique
/// coverage and agreeing coreference decisions; the support count differs
/// only slightly between classes, so the heuristic score is weakly
/// informative.
pub fn synthetic_corpus(config: &CorpusConfig) -> Result<SyntheticCorpus> {
    let mut rng = SplitMix64::new(config.seed);
    let days = config.collection_days.max(1);
    let mut b = Builder {
        rng: &mut rng,
        tweets: Vec::new(),
        decisions: Vec::new(),
        days,
    };
    let mut entries = Vec::new();
    let mut annotations = Vec::new();
    let mut judgments = Vec::new();
    let mut splits = BTreeMap::new();
    let mut labels = BTreeMap::new();

    for i in 0..config.entries {
        let id = format!("e{i:05}");
        let (p1, p2) = (format!("v{i}a"), format!("v{i}b"));
        let latent = b.rng.bernoulli(config.positive_rate);
        let observed = latent != b.rng.bernoulli(config.label_noise);

        let count = 3 + b.rng.below(5) + usize::from(latent && b.rng.bernoulli(0.3));
        let hi_nec = if latent { 0.8 } else { 0.25 };
        let reuse = if latent { 0.6 } else { 0.1 };
        let clique = if latent { 0.6 } else { 0.1 };
        let coref = if latent { 0.75 } else { 0.3 };

        let mut pairs = Vec::with_capacity(count);
        let mut lefts: Vec<(String, u32, BTreeSet<String>)> = Vec::new();
        let mut ctx_a = Vec::new();
        let mut ctx_b = Vec::new();
        for k in 0..count {
            let shared = b.rng.bernoulli(hi_nec);
            // Reusing an earlier left tweet grows the support-graph component.
            let (left, day, left_ents) = if !lefts.is_empty() && b.rng.bernoulli(reuse) {
                lefts[b.rng.below(lefts.len())].clone()
            } else {
                let day = b.rng.below(b.days as usize) as u32;
                let ents = b.entities("ent", 3);
                let t = b.tweet(format!("{id}-l{k}"), &p1, day, ents.clone());
                lefts.push((t.clone(), day, ents.clone()));
                (t, day, ents)
            };
            let right_ents = if shared {
                let mut s: BTreeSet<String> = left_ents.iter().take(2).cloned().collect();
                s.extend(b.entities("ent", 1));
                s
            } else {
                b.entities("ent", 3)
            };
            let right = b.tweet(format!("{id}-r{k}"), &p2, day, right_ents);
            let pair_id = format!("{id}/{k}");
            let agree = b.rng.bernoulli(coref);
            let entity_ok = agree && b.rng.bernoulli(0.8);
            b.decision(&pair_id, agree, entity_ok);
            if b.rng.bernoulli(clique) {
                let ctx = b.tweet(format!("{id}-c{k}"), "mention", day, BTreeSet::new());
                ctx_a.push(SupportPair { id: format!("{id}-ctxa/{k}"), left: left.clone(), right: ctx.clone(), day });
                ctx_b.push(SupportPair { id: format!("{id}-ctxb/{k}"), left: right.clone(), right: ctx, day });
            }
            pairs.push(SupportPair { id: pair_id, left, right, day });
        }
        entries.push(ParaphraseEntry {
            id: id.clone(),
            variants: vec![TemplateVariant {
                template1: format!("[a0] {p1} [a1]"),
                template2: format!("[a0] {p2} [a1]"),
                support_pairs: pairs,
            }],
            original_score: None,
        });
        for (suffix, ps) in [("ctxa", ctx_a), ("ctxb", ctx_b)] {
            if ps.is_empty() {
                continue;
            }
            entries.push(ParaphraseEntry {
                id: format!("{id}-{suffix}"),
                variants: vec![TemplateVariant {
                    template1: format!("[a0] {id}{suffix}x [a1]"),
                    template2: format!("[a0] {id}{suffix}y [a1]"),
                    support_pairs: ps,
                }],
                original_score: None,
            });
        }

        // One topic per entry; a shared cluster makes the lemma pair positive,
        // separate clusters make it negative.
        let mention = |lemma: &str, pos: usize| AnnotatedMention {
            doc: format!("{id}-doc"),
            lemma: lemma.to_string(),
            span: Span::new(pos, pos + 1),
            verbal: pos == 0 || i % 3 != 0,
        };
        let clusters = if observed {
            vec![AnnotatedCluster { id: "c0".into(), mentions: vec![mention(&p1, 0), mention(&p2, 1)] }]
        } else {
            vec![
                AnnotatedCluster { id: "c0".into(), mentions: vec![mention(&p1, 0)] },
                AnnotatedCluster { id: "c1".into(), mentions: vec![mention(&p2, 1)] },
            ]
        };
        annotations.push(EventClusterAnnotation { topic: format!("t{i:05}"), clusters });

        if b.rng.bernoulli(config.judged_fraction) {
            // Unanimous workers on one instantiation, agreeing with the label.
            for w in 0..3 {
                judgments.push(Judgment {
                    entry_id: id.clone(),
                    instantiation: 0,
                    worker: format!("w{w}"),
                    vote: observed,
                });
            }
        }

        let u = b.rng.next_f64();
        let split = if u < config.test_fraction {
            Split::Test
        } else if u < config.test_fraction + config.dev_fraction {
            Split::Dev
        } else {
            Split::Train
        };
        splits.insert(id.clone(), split);
        labels.insert(id, observed);
    }

    let Builder { tweets, decisions, .. } = b;
    let corpus = Corpus::new(tweets, entries, CorpusMeta { collection_days: days })?;
    Ok(SyntheticCorpus {
        corpus,
        decisions: DecisionStore::new(decisions)?,
        annotations,
        judgments,
        splits,
        labels,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorefConfig {
    pub topics: usize,
    pub clusters_per_topic: usize,
    pub min_cluster: usize,
    pub max_cluster: usize,
    pub documents_per_topic: usize,
    pub mention_dim: usize,
    /// Probability that a coreferring lemma pair has a resource entry.
    pub positive_coverage: f64,
    /// Probability that a non-coreferring lemma pair has a resource entry.
    pub negative_coverage: f64,
    pub seed: u64,
}

impl Default for CorefConfig {
    fn default() -> Self {
        CorefConfig {
            topics: 12,
            clusters_per_topic: 4,
            min_cluster: 2,
            max_cluster: 4,
            documents_per_topic: 3,
            mention_dim: 8,
            positive_coverage: 0.8,
            negative_coverage: 0.2,
            seed: 0,
        }
    }
}

pub struct SyntheticCoref {
    pub mentions: Vec<MentionRecord>,
    pub gold: Clustering,
    pub resource: ResourceFeatures,
}

impl SyntheticCoref {
    pub fn topics(&self) -> BTreeSet<&str> {
        self.mentions.iter().map(|m| m.topic.as_str()).collect()
    }

    pub fn in_topics(&self, topics: &BTreeSet<&str>) -> (Vec<MentionRecord>, Clustering) {
        let mentions: Vec<MentionRecord> = self
            .mentions
            .iter()
            .filter(|m| topics.contains(m.topic.as_str()))
            .cloned()
            .collect();
        let mut gold = Clustering::new();
        for m in &mentions {
            let c = self.gold.cluster_of(&m.id).expect("gold covers every mention");
            gold.insert(m.id.clone(), c.to_string()).expect("mention ids are unique");
        }
        (mentions, gold)
    }

    pub fn resource_records(&self) -> Vec<ResourceRecord> {
        self.resource
            .iter()
            .map(|((a, b), f)| ResourceRecord {
                id: None,
                lemmas: (a.clone(), b.clone()),
                features: f.clone(),
            })
            .collect()
    }

    /// Writes `mentions.jsonl`, `gold.jsonl` and `resource.jsonl`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        write_jsonl(&dir.join("mentions.jsonl"), &self.mentions)?;
        self.gold.save_jsonl(&dir.join("gold.jsonl"))?;
        write_jsonl(&dir.join("resource.jsonl"), &self.resource_records())
    }
}

fn feature_signature(rng: &mut SplitMix64, positive: bool) -> FeatureVector {
    let mut v = [0.0; NUM_FEATURES];
    let scale = if positive { 1.0 } else { 0.25 };
    for (k, x) in v.iter_mut().enumerate() {
        let base = match k {
            0 => 1.0,
            1 | 2 | 4 | 5 => 3.0,
            3 => 4.0,
            _ => 2.0 * scale,
        };
        *x = (base + 0.5 * rng.normal()).max(0.0);
    }
    FeatureVector::new(v).expect("finite non-negative")
}

/// Topics of planted clusters whose mention vectors are pure noise; each
/// mention has its own lemma, and the resource holds signal-bearing feature
/// vectors for most coreferring lemma pairs and a few others.
pub fn synthetic_coref(config: &CorefConfig) -> Result<SyntheticCoref> {
    let mut rng = SplitMix64::new(config.seed);
    let mut mentions = Vec::new();
    let mut gold = Clustering::new();
    let mut resource = ResourceFeatures::new();
    for t in 0..config.topics {
        let topic = format!("topic{t:03}");
        let mut members: Vec<(String, usize)> = Vec::new();
        for c in 0..config.clusters_per_topic {
            let span = config.max_cluster.saturating_sub(config.min_cluster) + 1;
            let size = config.min_cluster + rng.below(span);
            for _ in 0..size {
                let k = members.len();
                let doc = format!("{topic}-d{}", rng.below(config.documents_per_topic.max(1)));
                let m = MentionRecord {
                    id: format!("{topic}-m{k:03}"),
                    topic: topic.clone(),
                    document: doc,
                    span: Span::new(k, k + 1),
                    lemma: format!("{topic}-w{k}"),
                    vector: (0..config.mention_dim).map(|_| rng.normal()).collect(),
                };
                gold.insert(m.id.clone(), format!("{topic}/c{c}"))?;
                members.push((m.lemma.clone(), c));
                mentions.push(m);
            }
        }
        for i in 0..members.len() {
            for j in i + 1..members.len() {
                let same = members[i].1 == members[j].1;
                let p = if same { config.positive_coverage } else { config.negative_coverage };
                if rng.bernoulli(p) {
                    resource.insert(lemma_pair(&members[i].0, &members[j].0), feature_signature(&mut rng, same));
                }
            }
        }
    }
    Ok(SyntheticCoref { mentions, gold, resource })
}

/// `rows` uniform feature vectors in `[0, 1)^width`; the label depends on
/// the first three columns only: `(x0 > 0.5 && x1 > 0.3) || x2 > 0.8`.
pub fn informative_dataset(rows: usize, width: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<bool>) {
    let mut rng = SplitMix64::new(seed);
    let x: Vec<Vec<f64>> = (0..rows)
        .map(|_| (0..width).map(|_| rng.next_f64()).collect())
        .collect();
    let y = x
        .iter()
        .map(|r| (r[0] > 0.5 && r[1] > 0.3) || r[2] > 0.8)
        .collect();
    (x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::supervision::derive_labels;

    #[test]
    fn corpus_is_valid_and_labels_round_trip() {
        let s = synthetic_corpus(&CorpusConfig { entries: 60, seed: 3, ..Default::default() }).unwrap();
        let derived = derive_labels(&s.annotations, &s.corpus, &s.judgments, &s.splits).unwrap();
        assert_eq!(derived.len(), 60);
        for l in derived {
            assert_eq!(s.labels[&l.id], l.label);
        }
    }

    #[test]
    fn corpus_is_deterministic() {
        let cfg = CorpusConfig { entries: 20, seed: 9, ..Default::default() };
        let a = synthetic_corpus(&cfg).unwrap();
        let b = synthetic_corpus(&cfg).unwrap();
        assert_eq!(a.corpus.entries(), b.corpus.entries());
    }

    #[test]
    fn coref_topics_cover_gold() {
        let s = synthetic_coref(&CorefConfig::default()).unwrap();
        assert_eq!(s.gold.len(), s.mentions.len());
        assert_eq!(s.topics().len(), 12);
    }
}
