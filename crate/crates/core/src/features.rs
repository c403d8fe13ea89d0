//! The 17-slot feature vector of a paraphrase entry and the labeled design
//! matrix built from it.
//!
//! Slot layout (0-based index, CSV column name):
//!
//! | slot | column | meaning |
//! |---|---|---|
//! | 0 | `num_templates` | template variants sharing the lemma pair |
//! | 1 | `num_support_pairs` | support pairs across variants |
//! | 2 | `num_days` | distinct days of those pairs |
//! | 3 | `score` | maximal heuristic score across variants |
//! | 4 | `num_available_pairs` | support pairs whose two articles are retrievable |
//! | 5 | `available_days` | distinct days of the available pairs |
//! | 6 | `nec_above_threshold` | pairs with NEC ≥ T |
//! | 7 | `nec_avg_above_threshold` | mean NEC over those pairs |
//! | 8 | `perfect_clustered_with_nec` | pairs with NEC ≥ T and clustered predicates |
//! | 9 | `num_connected_components` | support-graph components with > 2 tweets |
//! | 10 | `avg_connected_component` | mean support-graph component size |
//! | 11 | `in_clique` | pairs inside a maximal clique of the global graph |
//! | 12 | `event_perfect` | pairs whose predicates were clustered together |
//! | 13 | `event_no_match` | pairs whose predicates stayed singletons |
//! | 14 | `entity_perfect` | pairs with a0/a0 and a1/a1 argument clusters |
//! | 15 | `entity_reverse` | pairs with an a0/a1 cross-tweet argument cluster |
//! | 16 | `entity_no_match` | remaining decided pairs |

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coref_decisions::{coref_feature_counts, perfectly_clustered_with_nec, DecisionStore};
use crate::corpus::{Corpus, ParaphraseEntry};
use crate::entity_coverage::{entry_nec_scores, nec_features_from_scores};
use crate::error::{Error, Result};
use crate::graph::{
    build_global_graph, build_support_graph, clique_coverage, connected_component_features,
    CliqueConfig, CliqueIndex, GlobalGraph,
};

pub const NUM_FEATURES: usize = 17;

pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "num_templates",
    "num_support_pairs",
    "num_days",
    "score",
    "num_available_pairs",
    "available_days",
    "nec_above_threshold",
    "nec_avg_above_threshold",
    "perfect_clustered_with_nec",
    "num_connected_components",
    "avg_connected_component",
    "in_clique",
    "event_perfect",
    "event_no_match",
    "entity_perfect",
    "entity_reverse",
    "entity_no_match",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FeatureVector([f64; NUM_FEATURES]);

impl FeatureVector {
    pub fn new(values: [f64; NUM_FEATURES]) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "feature {} is not finite",
                FEATURE_NAMES[i]
            )));
        }
        if let Some(i) = values.iter().position(|&v| v < 0.0) {
            return Err(Error::InvalidInput(format!(
                "feature {} is negative",
                FEATURE_NAMES[i]
            )));
        }
        Ok(FeatureVector(values))
    }

    pub fn zeros() -> Self {
        FeatureVector([0.0; NUM_FEATURES])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn values(&self) -> [f64; NUM_FEATURES] {
        self.0
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        FEATURE_NAMES.iter().position(|n| *n == name).map(|i| self.0[i])
    }
}

impl TryFrom<Vec<f64>> for FeatureVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        let arr: [f64; NUM_FEATURES] = v.try_into().map_err(|v: Vec<f64>| {
            Error::InvalidInput(format!("expected {NUM_FEATURES} features, got {}", v.len()))
        })?;
        FeatureVector::new(arr)
    }
}

impl From<FeatureVector> for Vec<f64> {
    fn from(f: FeatureVector) -> Self {
        f.0.to_vec()
    }
}

/// Everything shared across entries when assembling feature vectors.
pub struct FeatureContext<'a> {
    pub corpus: &'a Corpus,
    pub decisions: &'a DecisionStore,
    pub nec_threshold: f64,
    pub global: GlobalGraph,
    pub cliques: CliqueIndex,
}

impl<'a> FeatureContext<'a> {
    pub fn new(
        corpus: &'a Corpus,
        decisions: &'a DecisionStore,
        nec_threshold: f64,
        clique_config: &CliqueConfig,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&nec_threshold) {
            return Err(Error::Domain(format!(
                "NEC threshold {nec_threshold} outside [0, 1]"
            )));
        }
        let global = build_global_graph(corpus);
        let cliques = CliqueIndex::build(&global, clique_config);
        Ok(FeatureContext {
            corpus,
            decisions,
            nec_threshold,
            global,
            cliques,
        })
    }

    pub fn assemble(&self, entry: &ParaphraseEntry) -> Result<FeatureVector> {
        let base = self.corpus.base_features(entry);
        let nec_scores = entry_nec_scores(self.corpus, entry);
        let (above, avg_above) = nec_features_from_scores(&nec_scores, self.nec_threshold);
        let perfect_nec =
            perfectly_clustered_with_nec(entry, &nec_scores, self.decisions, self.nec_threshold);
        let (components, avg_component) =
            connected_component_features(&build_support_graph(self.corpus, entry));
        let in_clique = clique_coverage(entry, &self.global, &self.cliques);
        let coref = coref_feature_counts(entry, self.decisions).as_array();
        FeatureVector::new([
            base[0],
            base[1],
            base[2],
            base[3],
            base[4],
            base[5],
            above as f64,
            avg_above,
            perfect_nec as f64,
            components as f64,
            avg_component,
            in_clique as f64,
            coref[0] as f64,
            coref[1] as f64,
            coref[2] as f64,
            coref[3] as f64,
            coref[4] as f64,
        ])
    }

    /// Feature vectors of every corpus entry, keyed by entry id.
    pub fn assemble_all(&self) -> Result<BTreeMap<String, FeatureVector>> {
        self.corpus
            .entries()
            .par_iter()
            .map(|e| self.assemble(e).map(|f| (e.id.clone(), f)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidInput(format!("unknown split {other:?}"))),
        }
    }
}

/// A labeled entry, as found in `labels.csv` (`id,label,split`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub id: String,
    pub label: bool,
    pub split: Split,
}

pub fn read_labels(path: &Path) -> Result<Vec<LabelRecord>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let line = i + 2;
        let field = |k: usize| {
            row.get(k)
                .ok_or_else(|| Error::parse(path, line, format!("missing column {k}")))
        };
        out.push(LabelRecord {
            id: field(0)?.to_string(),
            label: parse_bool(field(1)?).map_err(|m| Error::parse(path, line, m))?,
            split: match row.get(2) {
                Some(s) if !s.is_empty() => s.parse().map_err(|e| Error::parse(path, line, e))?,
                _ => Split::Train,
            },
        });
    }
    Ok(out)
}

pub fn write_labels(path: &Path, labels: &[LabelRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["id", "label", "split"]).map_err(|e| csv_error(path, e))?;
    for l in labels {
        w.write_record([l.id.as_str(), if l.label { "1" } else { "0" }, l.split.as_str()])
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" => Ok(true),
        "0" | "false" | "no" => Ok(false),
        other => Err(format!("not a boolean: {other:?}")),
    }
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::parse(path, line, e)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRow {
    pub id: String,
    pub split: Split,
    pub features: FeatureVector,
    pub label: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledDataset {
    pub rows: Vec<DatasetRow>,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn split(&self, split: Split) -> LabeledDataset {
        LabeledDataset {
            rows: self.rows.iter().filter(|r| r.split == split).cloned().collect(),
        }
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.features.as_slice().to_vec()).collect()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.rows.iter().map(|r| r.label).collect()
    }

    pub fn header() -> Vec<&'static str> {
        let mut h = vec!["id", "split"];
        h.extend(FEATURE_NAMES);
        h.push("label");
        h
    }

    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(Self::header()).expect("in-memory write");
        for r in &self.rows {
            let mut rec = vec![r.id.clone(), r.split.to_string()];
            rec.extend(r.features.as_slice().iter().map(|v| v.to_string()));
            rec.push(if r.label { "1".into() } else { "0".into() });
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
        let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
        if header.iter().collect::<Vec<_>>() != Self::header() {
            return Err(Error::parse(path, 1, "unexpected dataset header"));
        }
        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| csv_error(path, e))?;
            let line = i + 2;
            let mut values = [0.0; NUM_FEATURES];
            for (k, v) in values.iter_mut().enumerate() {
                *v = rec[k + 2]
                    .parse()
                    .map_err(|e| Error::parse(path, line, format!("{}: {e}", FEATURE_NAMES[k])))?;
            }
            rows.push(DatasetRow {
                id: rec[0].to_string(),
                split: rec[1].parse().map_err(|e| Error::parse(path, line, e))?,
                features: FeatureVector::new(values).map_err(|e| Error::parse(path, line, e))?,
                label: parse_bool(&rec[NUM_FEATURES + 2]).map_err(|m| Error::parse(path, line, m))?,
            });
        }
        Ok(LabeledDataset { rows })
    }
}

/// Rows for labeled entries with at least `min_support` support pairs, in
/// label order.
pub fn build_dataset(
    ctx: &FeatureContext<'_>,
    labels: &[LabelRecord],
    min_support: usize,
) -> Result<LabeledDataset> {
    let mut seen: HashSet<(Split, &str)> = HashSet::new();
    let mut selected = Vec::new();
    for l in labels {
        let entry = ctx
            .corpus
            .entry(&l.id)
            .ok_or_else(|| Error::Integrity(format!("label for unknown entry {}", l.id)))?;
        if !seen.insert((l.split, l.id.as_str())) {
            return Err(Error::Integrity(format!(
                "entry {} labeled twice in split {}",
                l.id, l.split
            )));
        }
        if entry.support_count() >= min_support {
            selected.push((l, entry));
        }
    }
    let rows = selected
        .par_iter()
        .map(|(l, entry)| {
            Ok(DatasetRow {
                id: l.id.clone(),
                split: l.split,
                features: ctx.assemble(entry)?,
                label: l.label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LabeledDataset { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_has_seventeen_unique_names() {
        let unique: HashSet<&str> = FEATURE_NAMES.iter().copied().collect();
        assert_eq!(unique.len(), NUM_FEATURES);
        assert_eq!(LabeledDataset::header().len(), 20);
    }

    #[test]
    fn vector_rejects_nan_and_wrong_length() {
        let mut v = [0.0; NUM_FEATURES];
        v[3] = f64::NAN;
        assert!(FeatureVector::new(v).is_err());
        assert!(FeatureVector::try_from(vec![0.0; 16]).is_err());
        assert!(FeatureVector::try_from(vec![1.0; 17]).is_ok());
    }

    #[test]
    fn split_parsing() {
        assert_eq!("Dev".parse::<Split>().unwrap(), Split::Dev);
        assert!("holdout".parse::<Split>().is_err());
    }
}
