//! The paraphrase resource: tweets, paraphrase entries with their support
//! pairs, and the heuristic score the resource ships with.
//!
//! On disk a corpus is a directory holding three files:
//!
//! * `tweets.jsonl`: one [`TweetDoc`] per line.
//! * `pairs.jsonl`: one [`ParaphraseEntry`] per line, tweets referenced by id.
//! * `meta.json`: `{"collection_days": N}`.
//!
//! Spans are half-open token intervals over the whitespace-tokenized tweet text.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_json, read_jsonl, write_json, write_jsonl};

pub const TWEETS_FILE: &str = "tweets.jsonl";
pub const PAIRS_FILE: &str = "pairs.jsonl";
pub const META_FILE: &str = "meta.json";

/// Half-open token interval `[start, end)`, serialized as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }
}

impl From<[usize; 2]> for Span {
    fn from(a: [usize; 2]) -> Self {
        Span::new(a[0], a[1])
    }
}

impl From<Span> for [usize; 2] {
    fn from(s: Span) -> Self {
        [s.start, s.end]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TweetDoc {
    pub id: String,
    pub text: String,
    pub predicate_span: Span,
    pub arg0_span: Span,
    pub arg1_span: Span,
    pub day: u32,
    /// Entities from the tweet and the lead paragraph of its linked article.
    #[serde(default)]
    pub named_entities: BTreeSet<String>,
    /// Whether the linked article could still be retrieved.
    #[serde(default = "default_true")]
    pub available: bool,
}

fn default_true() -> bool {
    true
}

impl TweetDoc {
    pub fn tokens(&self) -> Vec<&str> {
        self.text.split_whitespace().collect()
    }

    fn span_text(&self, span: Span) -> String {
        let tokens = self.tokens();
        tokens[span.start.min(tokens.len())..span.end.min(tokens.len())].join(" ")
    }

    pub fn predicate_text(&self) -> String {
        self.span_text(self.predicate_span)
    }

    pub fn arg0_text(&self) -> String {
        self.span_text(self.arg0_span)
    }

    pub fn arg1_text(&self) -> String {
        self.span_text(self.arg1_span)
    }

    fn validate(&self) -> Result<()> {
        let n = self.tokens().len();
        let spans = [
            ("predicate_span", self.predicate_span),
            ("arg0_span", self.arg0_span),
            ("arg1_span", self.arg1_span),
        ];
        for (name, s) in spans {
            if s.is_empty() || s.end > n {
                return Err(Error::InvalidInput(format!(
                    "tweet {}: {name} [{}, {}) outside text of {n} tokens",
                    self.id, s.start, s.end
                )));
            }
        }
        for i in 0..spans.len() {
            for j in i + 1..spans.len() {
                if spans[i].1.overlaps(&spans[j].1) {
                    return Err(Error::InvalidInput(format!(
                        "tweet {}: {} overlaps {}",
                        self.id, spans[i].0, spans[j].0
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Case-folded, whitespace-trimmed entity string.
pub fn normalize_entity(s: &str) -> String {
    s.trim().to_lowercase()
}

/// Two same-day tweets whose predicate-argument tuples were aligned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportPair {
    #[serde(default)]
    pub id: String,
    pub left: String,
    pub right: String,
    pub day: u32,
}

/// One argument-slot ordering of a predicate template pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateVariant {
    pub template1: String,
    pub template2: String,
    pub support_pairs: Vec<SupportPair>,
}

impl TemplateVariant {
    pub fn count(&self) -> usize {
        self.support_pairs.len()
    }

    pub fn day_count(&self) -> usize {
        self.support_pairs
            .iter()
            .map(|p| p.day)
            .collect::<BTreeSet<_>>()
            .len()
    }
}

/// A predicate paraphrase: all template variants sharing one unordered pair
/// of predicate lemmas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParaphraseEntry {
    pub id: String,
    pub variants: Vec<TemplateVariant>,
    /// Heuristic score shipped with the resource. Filled with the maximal
    /// per-variant [`chirps_score`] when absent from the input.
    #[serde(default)]
    pub original_score: Option<f64>,
}

impl ParaphraseEntry {
    pub fn support_pairs(&self) -> impl Iterator<Item = &SupportPair> {
        self.variants.iter().flat_map(|v| v.support_pairs.iter())
    }

    pub fn support_count(&self) -> usize {
        self.variants.iter().map(TemplateVariant::count).sum()
    }

    /// Predicate lemmas of the first variant, in template order.
    pub fn predicates(&self) -> (String, String) {
        match self.variants.first() {
            Some(v) => (template_lemma(&v.template1), template_lemma(&v.template2)),
            None => (String::new(), String::new()),
        }
    }

    /// Unordered lemma pair, smaller lemma first.
    pub fn lemma_key(&self) -> (String, String) {
        let (a, b) = self.predicates();
        lemma_pair(&a, &b)
    }

    pub fn score(&self) -> f64 {
        self.original_score.unwrap_or(0.0)
    }
}

/// Sorted, case-folded lemma pair.
pub fn lemma_pair(a: &str, b: &str) -> (String, String) {
    let a = a.trim().to_lowercase();
    let b = b.trim().to_lowercase();
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Predicate lemma of a template such as `"[a0] die at [a1]"`: the
/// non-slot tokens, case-folded and space-joined (`"die at"`).
pub fn template_lemma(template: &str) -> String {
    template
        .split_whitespace()
        .filter(|t| !(t.starts_with('[') && t.ends_with(']')))
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusMeta {
    /// Number of days the resource was collected over.
    pub collection_days: u32,
}

/// Heuristic paraphrase score `count * (1 + d / N)`.
pub fn chirps_score(count: u64, d: u64, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("collection days N must be positive".into()));
    }
    if d > n {
        return Err(Error::Domain(format!("day count {d} exceeds N = {n}")));
    }
    Ok(count as f64 * (1.0 + d as f64 / n as f64))
}

/// Which predicate of the entry a tweet instantiates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    First,
    Second,
}

/// Loaded, cross-linked, immutable corpus.
#[derive(Debug, Clone)]
pub struct Corpus {
    tweets: BTreeMap<String, TweetDoc>,
    entries: Vec<ParaphraseEntry>,
    meta: CorpusMeta,
}

impl Corpus {
    /// Validate and cross-link. Entity strings are normalized, support-pair
    /// ids filled in where missing and `original_score` computed where absent.
    pub fn new(
        tweets: Vec<TweetDoc>,
        entries: Vec<ParaphraseEntry>,
        meta: CorpusMeta,
    ) -> Result<Self> {
        if meta.collection_days == 0 {
            return Err(Error::Domain("collection_days must be positive".into()));
        }
        let mut store = BTreeMap::new();
        for mut t in tweets {
            t.validate()?;
            if t.day >= meta.collection_days {
                return Err(Error::Domain(format!(
                    "tweet {} day {} outside collection of {} days",
                    t.id, t.day, meta.collection_days
                )));
            }
            t.named_entities = t.named_entities.iter().map(|e| normalize_entity(e)).collect();
            let id = t.id.clone();
            if store.insert(id.clone(), t).is_some() {
                return Err(Error::Integrity(format!("duplicate tweet id {id}")));
            }
        }

        let mut entry_ids = HashSet::new();
        let mut pair_ids = HashSet::new();
        let mut linked = Vec::with_capacity(entries.len());
        for mut entry in entries {
            if !entry_ids.insert(entry.id.clone()) {
                return Err(Error::Integrity(format!("duplicate entry id {}", entry.id)));
            }
            if entry.variants.is_empty() || entry.support_count() == 0 {
                return Err(Error::InvalidInput(format!(
                    "entry {} has no support pairs",
                    entry.id
                )));
            }
            let key = entry.lemma_key();
            for (vi, variant) in entry.variants.iter_mut().enumerate() {
                if lemma_pair(
                    &template_lemma(&variant.template1),
                    &template_lemma(&variant.template2),
                ) != key
                {
                    return Err(Error::Integrity(format!(
                        "entry {}: variant {vi} has lemma pair different from {key:?}",
                        entry.id
                    )));
                }
                for (pi, pair) in variant.support_pairs.iter_mut().enumerate() {
                    if pair.id.is_empty() {
                        pair.id = format!("{}/{vi}/{pi}", entry.id);
                    }
                    if !pair_ids.insert(pair.id.clone()) {
                        return Err(Error::Integrity(format!(
                            "duplicate support pair id {}",
                            pair.id
                        )));
                    }
                    if pair.left == pair.right {
                        return Err(Error::Integrity(format!(
                            "support pair {} pairs tweet {} with itself",
                            pair.id, pair.left
                        )));
                    }
                    for tid in [&pair.left, &pair.right] {
                        let tweet = store.get(tid).ok_or_else(|| {
                            Error::Integrity(format!(
                                "support pair {} cites missing tweet {tid}",
                                pair.id
                            ))
                        })?;
                        if tweet.day != pair.day {
                            return Err(Error::Integrity(format!(
                                "support pair {} on day {} but tweet {tid} is from day {}",
                                pair.id, pair.day, tweet.day
                            )));
                        }
                    }
                }
            }
            if entry.original_score.is_none() {
                entry.original_score = Some(max_variant_score(&entry, meta.collection_days));
            }
            linked.push(entry);
        }

        let corpus = Corpus {
            tweets: store,
            entries: linked,
            meta,
        };
        for entry in &corpus.entries {
            corpus.check_sides(entry)?;
        }
        Ok(corpus)
    }

    pub fn tweets(&self) -> &BTreeMap<String, TweetDoc> {
        &self.tweets
    }

    pub fn tweet(&self, id: &str) -> Option<&TweetDoc> {
        self.tweets.get(id)
    }

    pub fn entries(&self) -> &[ParaphraseEntry] {
        &self.entries
    }

    pub fn entry(&self, id: &str) -> Option<&ParaphraseEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn meta(&self) -> CorpusMeta {
        self.meta
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Side assignment of every tweet in the entry's support pairs. A variant
    /// whose first template carries the entry's second predicate contributes
    /// its pairs with sides swapped.
    pub fn sides(&self, entry: &ParaphraseEntry) -> BTreeMap<String, Side> {
        self.try_sides(entry).unwrap_or_default()
    }

    fn try_sides(&self, entry: &ParaphraseEntry) -> Result<BTreeMap<String, Side>> {
        let (p1, _) = entry.predicates();
        let mut sides = BTreeMap::new();
        for v in &entry.variants {
            let straight = template_lemma(&v.template1) == p1;
            for pair in &v.support_pairs {
                let (l, r) = if straight {
                    (Side::First, Side::Second)
                } else {
                    (Side::Second, Side::First)
                };
                for (tid, side) in [(&pair.left, l), (&pair.right, r)] {
                    if let Some(prev) = sides.insert(tid.clone(), side) {
                        if prev != side {
                            return Err(Error::Integrity(format!(
                                "entry {}: tweet {tid} instantiates both predicates",
                                entry.id
                            )));
                        }
                    }
                }
            }
        }
        Ok(sides)
    }

    fn check_sides(&self, entry: &ParaphraseEntry) -> Result<()> {
        let (p1, p2) = entry.predicates();
        if p1 == p2 {
            return Ok(());
        }
        self.try_sides(entry).map(|_| ())
    }

    /// The six resource-derived features, in order: template variants,
    /// support pairs, distinct days, max variant score, available support
    /// pairs, distinct days of available pairs.
    pub fn base_features(&self, entry: &ParaphraseEntry) -> [f64; 6] {
        let pairs: Vec<&SupportPair> = entry.support_pairs().collect();
        let days: BTreeSet<u32> = pairs.iter().map(|p| p.day).collect();
        let available: Vec<&&SupportPair> = pairs
            .iter()
            .filter(|p| self.is_available(&p.left) && self.is_available(&p.right))
            .collect();
        let available_days: BTreeSet<u32> = available.iter().map(|p| p.day).collect();
        [
            entry.variants.len() as f64,
            pairs.len() as f64,
            days.len() as f64,
            max_variant_score(entry, self.meta.collection_days),
            available.len() as f64,
            available_days.len() as f64,
        ]
    }

    fn is_available(&self, id: &str) -> bool {
        self.tweets.get(id).is_some_and(|t| t.available)
    }

    /// Read `tweets.jsonl`, `pairs.jsonl` and `meta.json` from `dir`.
    pub fn load(dir: &Path) -> Result<Self> {
        let tweets: Vec<TweetDoc> = read_jsonl(&dir.join(TWEETS_FILE))?;
        let entries: Vec<ParaphraseEntry> = read_jsonl(&dir.join(PAIRS_FILE))?;
        let meta: CorpusMeta = read_json(&dir.join(META_FILE))?;
        Corpus::new(tweets, entries, meta)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let tweets: Vec<&TweetDoc> = self.tweets.values().collect();
        write_jsonl(&dir.join(TWEETS_FILE), &tweets)?;
        write_jsonl(&dir.join(PAIRS_FILE), &self.entries)?;
        write_json(&dir.join(META_FILE), &self.meta)
    }
}

/// Load a corpus directory. Equivalent to [`Corpus::load`].
pub fn load_corpus(dir: &Path) -> Result<Corpus> {
    Corpus::load(dir)
}

fn max_variant_score(entry: &ParaphraseEntry, n: u32) -> f64 {
    entry
        .variants
        .iter()
        .map(|v| {
            // Day indices are < N, so a variant's distinct-day count never exceeds N.
            chirps_score(v.count() as u64, v.day_count() as u64, n as u64).unwrap_or(0.0)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tweet(id: &str, day: u32, available: bool) -> TweetDoc {
        TweetDoc {
            id: id.into(),
            text: "police arrest man downtown".into(),
            predicate_span: Span::new(1, 2),
            arg0_span: Span::new(0, 1),
            arg1_span: Span::new(2, 3),
            day,
            named_entities: BTreeSet::new(),
            available,
        }
    }

    fn pair(left: &str, right: &str, day: u32) -> SupportPair {
        SupportPair {
            id: String::new(),
            left: left.into(),
            right: right.into(),
            day,
        }
    }

    fn entry(id: &str, variants: Vec<(&str, &str, Vec<SupportPair>)>) -> ParaphraseEntry {
        ParaphraseEntry {
            id: id.into(),
            variants: variants
                .into_iter()
                .map(|(a, b, p)| TemplateVariant {
                    template1: a.into(),
                    template2: b.into(),
                    support_pairs: p,
                })
                .collect(),
            original_score: None,
        }
    }

    #[test]
    fn chirps_score_examples() {
        assert_eq!(chirps_score(5, 3, 30).unwrap(), 5.5);
        assert_eq!(chirps_score(0, 0, 100).unwrap(), 0.0);
        assert_eq!(chirps_score(7, 100, 100).unwrap(), 14.0);
        assert!(matches!(chirps_score(1, 0, 0), Err(Error::Domain(_))));
        assert!(matches!(chirps_score(1, 11, 10), Err(Error::Domain(_))));
    }

    #[test]
    fn template_lemma_strips_slots() {
        assert_eq!(template_lemma("[a0] die at [a1]"), "die at");
        assert_eq!(template_lemma("release [a0] [a1]"), "release");
        assert_eq!(lemma_pair("Reveal", "release"), ("release".into(), "reveal".into()));
    }

    #[test]
    fn slot_order_variants_count_as_two_templates() {
        let tweets = vec![
            tweet("t1", 0, true),
            tweet("t2", 0, true),
            tweet("t3", 1, true),
            tweet("t4", 1, true),
        ];
        let e = entry(
            "e",
            vec![
                ("[a0] release [a1]", "[a0] reveal [a1]", vec![pair("t1", "t2", 0)]),
                ("release [a0] [a1]", "reveal [a0] [a1]", vec![pair("t3", "t4", 1)]),
            ],
        );
        let c = Corpus::new(tweets, vec![e], CorpusMeta { collection_days: 10 }).unwrap();
        let f = c.base_features(&c.entries()[0]);
        assert_eq!(f[0], 2.0);
        assert_eq!(f[1], 2.0);
        assert_eq!(f[4], f[1]);
        assert_eq!(f[5], f[2]);
    }

    #[test]
    fn base_features_hand_fixture() {
        // Days {1, 1, 4}; N = 10; one tweet unavailable.
        let build = |unavailable: &str| {
            let tweets = ["a", "b", "c", "d", "e", "f"]
                .iter()
                .zip([1, 1, 1, 1, 4, 4])
                .map(|(id, day)| tweet(id, day, *id != unavailable))
                .collect();
            let e = entry(
                "e",
                vec![(
                    "[a0] hit [a1]",
                    "[a0] strike [a1]",
                    vec![pair("a", "b", 1), pair("c", "d", 1), pair("e", "f", 4)],
                )],
            );
            Corpus::new(tweets, vec![e], CorpusMeta { collection_days: 10 }).unwrap()
        };
        let close = |a: [f64; 6], b: [f64; 6]| a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-12);
        let c = build("a");
        assert!(close(c.base_features(&c.entries()[0]), [1.0, 3.0, 2.0, 3.6, 2.0, 2.0]));
        let c = build("e");
        assert!(close(c.base_features(&c.entries()[0]), [1.0, 3.0, 2.0, 3.6, 2.0, 1.0]));
        assert!((c.entries()[0].score() - 3.6).abs() < 1e-12);
    }

    #[test]
    fn dangling_tweet_is_rejected() {
        let e = entry("e", vec![("[a0] hit [a1]", "[a0] strike [a1]", vec![pair("a", "zz", 0)])]);
        let err = Corpus::new(vec![tweet("a", 0, true)], vec![e], CorpusMeta { collection_days: 1 })
            .unwrap_err();
        assert!(matches!(err, Error::Integrity(_)), "{err}");
    }

    #[test]
    fn day_mismatch_is_rejected() {
        let e = entry("e", vec![("[a0] hit [a1]", "[a0] strike [a1]", vec![pair("a", "b", 0)])]);
        let tweets = vec![tweet("a", 0, true), tweet("b", 1, true)];
        assert!(Corpus::new(tweets, vec![e], CorpusMeta { collection_days: 3 }).is_err());
    }

    #[test]
    fn bad_spans_are_rejected() {
        let mut t = tweet("a", 0, true);
        t.arg1_span = Span::new(1, 3);
        assert!(t.validate().is_err());
        t.arg1_span = Span::new(3, 9);
        assert!(t.validate().is_err());
    }

    #[test]
    fn mixed_lemma_variants_are_rejected() {
        let tweets = vec![tweet("a", 0, true), tweet("b", 0, true)];
        let e = entry(
            "e",
            vec![
                ("[a0] hit [a1]", "[a0] strike [a1]", vec![pair("a", "b", 0)]),
                ("[a0] hit [a1]", "[a0] kill [a1]", vec![]),
            ],
        );
        assert!(Corpus::new(tweets, vec![e], CorpusMeta { collection_days: 1 }).is_err());
    }

    #[test]
    fn entities_are_case_folded() {
        let mut t = tweet("a", 0, true);
        t.named_entities = ["Chuck Berry", " Police "].iter().map(|s| s.to_string()).collect();
        let c = Corpus::new(vec![t], vec![], CorpusMeta { collection_days: 1 }).unwrap();
        let ne: Vec<_> = c.tweet("a").unwrap().named_entities.iter().cloned().collect();
        assert_eq!(ne, vec!["chuck berry", "police"]);
    }
}
