//! Partition-level coreference metrics (MUC, B³, CEAF-e, CoNLL F1), gold
//! pair coverage by a paraphrase resource, and pairwise error diffs between
//! two system clusterings.
//!
//! Mentions are matched by identity. Every ratio with a zero denominator is 0.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::assignment::max_weight_assignment;
use crate::corpus::{lemma_pair, Span};
use crate::error::{Error, Result};
use crate::io::{read_jsonl, write_jsonl};
use crate::supervision::{mention_id, EventClusterAnnotation};

/// Mention id → cluster id over a fixed mention universe.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Clustering {
    assignment: BTreeMap<String, String>,
}

/// One line of the JSONL clustering format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub mention: String,
    pub cluster: String,
}

impl Clustering {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_assignments<I, M, C>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (M, C)>,
        M: Into<String>,
        C: Into<String>,
    {
        let mut c = Clustering::new();
        for (m, cl) in pairs {
            c.insert(m.into(), cl.into())?;
        }
        Ok(c)
    }

    /// Build from explicit clusters; cluster ids are the cluster positions.
    pub fn from_clusters<S: AsRef<str>>(clusters: &[Vec<S>]) -> Result<Self> {
        let mut c = Clustering::new();
        for (i, cluster) in clusters.iter().enumerate() {
            for m in cluster {
                c.insert(m.as_ref().to_string(), i.to_string())?;
            }
        }
        Ok(c)
    }

    pub fn insert(&mut self, mention: String, cluster: String) -> Result<()> {
        if self.assignment.contains_key(&mention) {
            return Err(Error::InvalidInput(format!("mention {mention} assigned twice")));
        }
        self.assignment.insert(mention, cluster);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn cluster_of(&self, mention: &str) -> Option<&str> {
        self.assignment.get(mention).map(String::as_str)
    }

    pub fn mentions(&self) -> impl Iterator<Item = &str> {
        self.assignment.keys().map(String::as_str)
    }

    /// Clusters as sorted mention lists, ordered by their smallest mention.
    pub fn clusters(&self) -> Vec<Vec<String>> {
        let mut by_id: BTreeMap<&str, Vec<String>> = BTreeMap::new();
        for (m, c) in &self.assignment {
            by_id.entry(c).or_default().push(m.clone());
        }
        let mut out: Vec<Vec<String>> = by_id.into_values().collect();
        out.sort();
        out
    }

    pub fn same_cluster(&self, a: &str, b: &str) -> bool {
        match (self.assignment.get(a), self.assignment.get(b)) {
            (Some(x), Some(y)) => x == y,
            _ => false,
        }
    }

    /// Same partition, ignoring cluster ids.
    pub fn same_partition(&self, other: &Clustering) -> bool {
        self.clusters() == other.clusters()
    }

    pub fn to_assignments(&self) -> Vec<ClusterAssignment> {
        self.assignment
            .iter()
            .map(|(m, c)| ClusterAssignment {
                mention: m.clone(),
                cluster: c.clone(),
            })
            .collect()
    }

    pub fn load_jsonl(path: &Path) -> Result<Self> {
        let rows: Vec<ClusterAssignment> = read_jsonl(path)?;
        Clustering::from_assignments(rows.into_iter().map(|r| (r.mention, r.cluster)))
    }

    pub fn save_jsonl(&self, path: &Path) -> Result<()> {
        write_jsonl(path, &self.to_assignments())
    }

    /// Column format: `document start end cluster_id` per line,
    /// whitespace-separated; blank lines and `#` comments are skipped.
    /// Mention ids become `document:start-end`.
    pub fn load_conll(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut c = Clustering::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 4 {
                return Err(Error::parse(path, i + 1, "expected: document start end cluster"));
            }
            let num = |s: &str| {
                s.parse::<usize>()
                    .map_err(|e| Error::parse(path, i + 1, format!("{s:?}: {e}")))
            };
            let span = Span::new(num(cols[1])?, num(cols[2])?);
            c.insert(mention_id(cols[0], span), cols[3].to_string())
                .map_err(|e| Error::parse(path, i + 1, e))?;
        }
        Ok(c)
    }
}

/// Gold event clustering of annotated topics; cluster ids are `topic/cluster`.
pub fn gold_clustering(annotations: &[EventClusterAnnotation]) -> Result<Clustering> {
    let mut c = Clustering::new();
    for t in annotations {
        for cl in &t.clusters {
            for m in &cl.mentions {
                c.insert(m.id(), format!("{}/{}", t.topic, cl.id))?;
            }
        }
    }
    Ok(c)
}

fn check_universe(a: &Clustering, b: &Clustering) -> Result<()> {
    if a.assignment.len() != b.assignment.len() || a.mentions().ne(b.mentions()) {
        let left: BTreeSet<&str> = a.mentions().collect();
        let right: BTreeSet<&str> = b.mentions().collect();
        let example = left.symmetric_difference(&right).next().copied().unwrap_or("");
        return Err(Error::InvalidInput(format!(
            "clusterings cover different mentions (e.g. {example:?})"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricScore {
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
}

impl MetricScore {
    fn new(recall: f64, precision: f64) -> Self {
        let f1 = if recall + precision == 0.0 {
            0.0
        } else {
            2.0 * recall * precision / (recall + precision)
        };
        MetricScore {
            recall,
            precision,
            f1,
        }
    }
}

fn div(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Index clusters of both sides over a shared mention numbering.
fn indexed(gold: &Clustering, sys: &Clustering) -> (Vec<Vec<usize>>, Vec<Vec<usize>>, Vec<usize>, Vec<usize>) {
    let ids: BTreeMap<&str, usize> = gold.mentions().enumerate().map(|(i, m)| (m, i)).collect();
    let group = |c: &Clustering| {
        let mut out: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (m, cl) in &c.assignment {
            out.entry(cl.as_str()).or_default().push(ids[m.as_str()]);
        }
        let clusters: Vec<Vec<usize>> = out.into_values().collect();
        let mut of = vec![0; ids.len()];
        for (ci, cl) in clusters.iter().enumerate() {
            for &m in cl {
                of[m] = ci;
            }
        }
        (clusters, of)
    };
    let (g, g_of) = group(gold);
    let (s, s_of) = group(sys);
    (g, s, g_of, s_of)
}

/// Link-based MUC.
pub fn muc(gold: &Clustering, sys: &Clustering) -> Result<MetricScore> {
    check_universe(gold, sys)?;
    let (g, s, g_of, s_of) = indexed(gold, sys);
    let side = |key: &[Vec<usize>], other_of: &[usize]| {
        let (mut num, mut den) = (0usize, 0usize);
        for cluster in key {
            let parts: BTreeSet<usize> = cluster.iter().map(|&m| other_of[m]).collect();
            num += cluster.len() - parts.len();
            den += cluster.len() - 1;
        }
        div(num as f64, den as f64)
    };
    Ok(MetricScore::new(side(&g, &s_of), side(&s, &g_of)))
}

/// Mention-averaged B³.
pub fn b_cubed(gold: &Clustering, sys: &Clustering) -> Result<MetricScore> {
    check_universe(gold, sys)?;
    let (g, s, g_of, s_of) = indexed(gold, sys);
    let n = g_of.len();
    if n == 0 {
        return Ok(MetricScore::new(0.0, 0.0));
    }
    let (mut r, mut p) = (0.0, 0.0);
    for m in 0..n {
        let gc = &g[g_of[m]];
        let sc = &s[s_of[m]];
        let overlap = gc.iter().filter(|&&x| s_of[x] == s_of[m]).count() as f64;
        r += overlap / gc.len() as f64;
        p += overlap / sc.len() as f64;
    }
    Ok(MetricScore::new(r / n as f64, p / n as f64))
}

/// Entity-level similarity `2|g ∩ s| / (|g| + |s|)`.
pub fn phi4(gold_size: usize, sys_size: usize, overlap: usize) -> f64 {
    div(2.0 * overlap as f64, (gold_size + sys_size) as f64)
}

/// Optimal total φ4 over one-to-one gold/system cluster alignments, with
/// the numbers of gold and system clusters.
pub fn ceaf_e_alignment(gold: &Clustering, sys: &Clustering) -> Result<(f64, usize, usize)> {
    check_universe(gold, sys)?;
    let (g, s, _, s_of) = indexed(gold, sys);
    let weights: Vec<Vec<f64>> = g
        .iter()
        .map(|gc| {
            let mut overlap = vec![0usize; s.len()];
            for &m in gc {
                overlap[s_of[m]] += 1;
            }
            s.iter()
                .zip(&overlap)
                .map(|(sc, &o)| phi4(gc.len(), sc.len(), o))
                .collect()
        })
        .collect();
    let (total, _) = max_weight_assignment(&weights);
    Ok((total, g.len(), s.len()))
}

pub fn ceaf_e(gold: &Clustering, sys: &Clustering) -> Result<MetricScore> {
    let (total, ng, ns) = ceaf_e_alignment(gold, sys)?;
    Ok(MetricScore::new(div(total, ng as f64), div(total, ns as f64)))
}

/// Arithmetic mean of the MUC, B³ and CEAF-e F1 values.
pub fn conll_f1(muc_f1: f64, b_cubed_f1: f64, ceaf_e_f1: f64) -> f64 {
    (muc_f1 + b_cubed_f1 + ceaf_e_f1) / 3.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub muc: MetricScore,
    pub b_cubed: MetricScore,
    pub ceaf_e: MetricScore,
    pub conll_f1: f64,
}

pub fn score(gold: &Clustering, sys: &Clustering) -> Result<MetricReport> {
    let m = muc(gold, sys)?;
    let b = b_cubed(gold, sys)?;
    let c = ceaf_e(gold, sys)?;
    Ok(MetricReport {
        muc: m,
        b_cubed: b,
        ceaf_e: c,
        conll_f1: conll_f1(m.f1, b.f1, c.f1),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub covered: usize,
    pub total: usize,
    pub percent: f64,
}

/// Share of coreferring gold mention pairs (all unordered pairs within a
/// gold cluster) whose lemma pair is a resource entry. With `verbal_only`,
/// only pairs of two verbal mentions are counted.
pub fn coverage(
    annotations: &[EventClusterAnnotation],
    resource: &BTreeSet<(String, String)>,
    verbal_only: bool,
) -> CoverageReport {
    let (mut covered, mut total) = (0, 0);
    for t in annotations {
        for c in &t.clusters {
            for (i, a) in c.mentions.iter().enumerate() {
                for b in &c.mentions[i + 1..] {
                    if verbal_only && !(a.verbal && b.verbal) {
                        continue;
                    }
                    total += 1;
                    if resource.contains(&lemma_pair(&a.lemma, &b.lemma)) {
                        covered += 1;
                    }
                }
            }
        }
    }
    CoverageReport {
        covered,
        total,
        percent: 100.0 * div(covered as f64, total as f64),
    }
}

/// Mention pairs whose clustering the new system fixed relative to a baseline.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorDiff {
    /// Linked by the baseline, unlinked by the new system and by gold.
    pub fp_recovered: Vec<(String, String)>,
    /// Linked in gold and by the new system, unlinked by the baseline.
    pub fn_recovered: Vec<(String, String)>,
}

impl ErrorDiff {
    /// CSV with columns `kind,mention_a,mention_b`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["kind", "mention_a", "mention_b"]).expect("in-memory write");
        for (kind, pairs) in [("false_positive", &self.fp_recovered), ("false_negative", &self.fn_recovered)] {
            for (a, b) in pairs {
                w.write_record([kind, a.as_str(), b.as_str()]).expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }
}

fn linked_pairs(c: &Clustering) -> BTreeSet<(String, String)> {
    let mut out = BTreeSet::new();
    for cluster in c.clusters() {
        for (i, a) in cluster.iter().enumerate() {
            for b in &cluster[i + 1..] {
                out.insert((a.clone(), b.clone()));
            }
        }
    }
    out
}

pub fn diff_errors(gold: &Clustering, baseline: &Clustering, new: &Clustering) -> Result<ErrorDiff> {
    check_universe(gold, baseline)?;
    check_universe(gold, new)?;
    let fp_recovered = linked_pairs(baseline)
        .into_iter()
        .filter(|(a, b)| !new.same_cluster(a, b) && !gold.same_cluster(a, b))
        .collect();
    let fn_recovered = linked_pairs(new)
        .into_iter()
        .filter(|(a, b)| gold.same_cluster(a, b) && !baseline.same_cluster(a, b))
        .collect();
    Ok(ErrorDiff {
        fp_recovered,
        fn_recovered,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(clusters: &[&[&str]]) -> Clustering {
        let v: Vec<Vec<&str>> = clusters.iter().map(|c| c.to_vec()).collect();
        Clustering::from_clusters(&v).unwrap()
    }

    fn close(a: f64, b: f64) {
        assert!((a - b).abs() < 1e-12, "{a} != {b}");
    }

    #[test]
    fn muc_example() {
        let m = muc(&c(&[&["a", "b", "c"]]), &c(&[&["a", "b"], &["c"]])).unwrap();
        close(m.recall, 0.5);
        close(m.precision, 1.0);
        close(m.f1, 2.0 / 3.0);
        let singles = c(&[&["a"], &["b"]]);
        let m = muc(&singles, &singles).unwrap();
        assert_eq!((m.recall, m.precision, m.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn b_cubed_example() {
        let b = b_cubed(&c(&[&["a", "b"], &["c"]]), &c(&[&["a", "b", "c"]])).unwrap();
        close(b.recall, 1.0);
        close(b.precision, 5.0 / 9.0);
        close(b.f1, 5.0 / 7.0);
    }

    #[test]
    fn ceaf_e_example() {
        let e = ceaf_e(&c(&[&["a", "b"], &["c"]]), &c(&[&["a"], &["b"], &["c"]])).unwrap();
        close(e.recall, 5.0 / 6.0);
        close(e.precision, 5.0 / 9.0);
        close(e.f1, 2.0 / 3.0);
    }

    #[test]
    fn identity_is_perfect() {
        let g = c(&[&["a", "b"], &["c", "d", "e"], &["f"]]);
        let r = score(&g, &g).unwrap();
        assert_eq!((r.muc.f1, r.b_cubed.f1, r.ceaf_e.f1, r.conll_f1), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn universe_mismatch() {
        assert!(muc(&c(&[&["a"]]), &c(&[&["b"]])).is_err());
        assert!(diff_errors(&c(&[&["a"]]), &c(&[&["a"]]), &c(&[&["a", "b"]])).is_err());
    }

    #[test]
    fn conll_examples() {
        close(conll_f1(1.0, 1.0, 1.0), 1.0);
        assert!((conll_f1(80.9, 80.3, 77.3) - 79.5).abs() < 0.05);
    }

    #[test]
    fn diff_examples() {
        let gold = c(&[&["a"], &["b"], &["c", "d"]]);
        let base = c(&[&["a", "b"], &["c"], &["d"]]);
        let new = c(&[&["a"], &["b"], &["c", "d"]]);
        let d = diff_errors(&gold, &base, &new).unwrap();
        assert_eq!(d.fp_recovered, vec![("a".to_string(), "b".to_string())]);
        assert_eq!(d.fn_recovered, vec![("c".to_string(), "d".to_string())]);
        let same = diff_errors(&gold, &base, &base).unwrap();
        assert!(same.fp_recovered.is_empty() && same.fn_recovered.is_empty());
    }
}
