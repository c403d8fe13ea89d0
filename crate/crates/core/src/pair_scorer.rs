//! Pairwise event-mention scorer with an optional paraphrase-feature
//! component, trained by full-batch gradient descent on binary
//! cross-entropy, and the average-linkage clustering that consumes it.
//!
//! The scorer input for mentions `i, j` is
//! `[v_i; v_j; v_i ∘ v_j; b_ij; c_ij]` where `b_ij` are binary pair features
//! and `c_ij = NN(f_ij)` is the output of a one-hidden-layer network applied
//! to the entry's 17-slot feature vector, or to the zero vector when the
//! lemma pair has no resource entry. The scorer itself is one tanh hidden
//! layer followed by a sigmoid output.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coref_metrics::Clustering;
use crate::corpus::{lemma_pair, Span};
use crate::error::{Error, Result};
use crate::features::{FeatureVector, NUM_FEATURES};
use crate::io::{read_json, read_jsonl, write_json};
use crate::rng::SplitMix64;

/// Hidden width of the paraphrase-feature component.
pub const COMPONENT_HIDDEN: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScorerConfig {
    pub mention_dim: usize,
    pub binary_width: usize,
    pub component_output: usize,
    pub scorer_hidden: usize,
    /// Feed the paraphrase component into the scorer.
    pub use_chirps: bool,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        ScorerConfig {
            mention_dim: 1024,
            binary_width: 2,
            component_output: 50,
            scorer_hidden: 50,
            use_chirps: true,
            learning_rate: 0.1,
            epochs: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Layout {
    comp_w1: usize,
    comp_b1: usize,
    comp_w2: usize,
    comp_b2: usize,
    sc_w1: usize,
    sc_b1: usize,
    sc_w2: usize,
    sc_b2: usize,
    total: usize,
    input: usize,
}

impl ScorerConfig {
    fn component_width(&self) -> usize {
        if self.use_chirps {
            self.component_output
        } else {
            0
        }
    }

    fn input_width(&self) -> usize {
        3 * self.mention_dim + self.binary_width + self.component_width()
    }

    fn layout(&self) -> Layout {
        let (h, o) = if self.use_chirps {
            (COMPONENT_HIDDEN, self.component_output)
        } else {
            (0, 0)
        };
        let input = self.input_width();
        let mut off = 0;
        let mut take = |n: usize| {
            let at = off;
            off += n;
            at
        };
        let comp_w1 = take(h * NUM_FEATURES);
        let comp_b1 = take(h);
        let comp_w2 = take(o * h);
        let comp_b2 = take(o);
        let sc_w1 = take(self.scorer_hidden * input);
        let sc_b1 = take(self.scorer_hidden);
        let sc_w2 = take(self.scorer_hidden);
        let sc_b2 = take(1);
        Layout {
            comp_w1,
            comp_b1,
            comp_w2,
            comp_b2,
            sc_w1,
            sc_b1,
            sc_w2,
            sc_b2,
            total: off,
            input,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.scorer_hidden == 0 {
            return Err(Error::InvalidInput("scorer_hidden must be positive".into()));
        }
        if self.use_chirps && self.component_output == 0 {
            return Err(Error::InvalidInput("component_output must be positive".into()));
        }
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(Error::InvalidInput("learning_rate must be finite and ≥ 0".into()));
        }
        Ok(())
    }
}

/// Scorer input for one mention pair.
#[derive(Debug, Clone, Copy)]
pub struct PairInput<'a> {
    pub left: &'a [f64],
    pub right: &'a [f64],
    /// Resource features of the pair's lemma pair, if it has an entry.
    pub features: Option<&'a FeatureVector>,
    pub binary: &'a [f64],
}

#[derive(Debug, Clone, Copy)]
pub struct LabeledPair<'a> {
    pub input: PairInput<'a>,
    pub label: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScorer {
    pub config: ScorerConfig,
    params: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Intermediate values of one forward pass.
struct Forward {
    comp_in: [f64; NUM_FEATURES],
    comp_hidden: Vec<f64>,
    x: Vec<f64>,
    hidden: Vec<f64>,
    z: f64,
}

impl PairScorer {
    /// Weights uniform in `±1/sqrt(fan_in)`, biases zero.
    pub fn new(config: ScorerConfig) -> Result<Self> {
        config.validate()?;
        let l = config.layout();
        let mut params = vec![0.0; l.total];
        let mut rng = SplitMix64::new(config.seed);
        let mut fill = |range: std::ops::Range<usize>, fan_in: usize| {
            let s = 1.0 / (fan_in.max(1) as f64).sqrt();
            for p in &mut params[range] {
                *p = (2.0 * rng.next_f64() - 1.0) * s;
            }
        };
        if config.use_chirps {
            fill(l.comp_w1..l.comp_b1, NUM_FEATURES);
            fill(l.comp_w2..l.comp_b2, COMPONENT_HIDDEN);
        }
        fill(l.sc_w1..l.sc_b1, l.input);
        fill(l.sc_w2..l.sc_b2, config.scorer_hidden);
        Ok(PairScorer { config, params })
    }

    pub fn from_params(config: ScorerConfig, params: Vec<f64>) -> Result<Self> {
        config.validate()?;
        if params.len() != config.layout().total {
            return Err(Error::InvalidInput(format!(
                "expected {} parameters, got {}",
                config.layout().total,
                params.len()
            )));
        }
        Ok(PairScorer { config, params })
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s: PairScorer = read_json(path)?;
        PairScorer::from_params(s.config, s.params)
    }

    fn check(&self, p: &PairInput<'_>) -> Result<()> {
        let c = &self.config;
        if p.left.len() != c.mention_dim || p.right.len() != c.mention_dim {
            return Err(Error::InvalidInput(format!(
                "mention vectors must have {} dims, got {} and {}",
                c.mention_dim,
                p.left.len(),
                p.right.len()
            )));
        }
        if p.binary.len() != c.binary_width {
            return Err(Error::InvalidInput(format!(
                "expected {} binary features, got {}",
                c.binary_width,
                p.binary.len()
            )));
        }
        Ok(())
    }

    fn component_forward(&self, f: Option<&FeatureVector>) -> ([f64; NUM_FEATURES], Vec<f64>, Vec<f64>) {
        let l = self.config.layout();
        let input = f.map_or([0.0; NUM_FEATURES], FeatureVector::values);
        if !self.config.use_chirps {
            return (input, Vec::new(), Vec::new());
        }
        let w = &self.params;
        let hidden: Vec<f64> = (0..COMPONENT_HIDDEN)
            .map(|k| {
                let row = &w[l.comp_w1 + k * NUM_FEATURES..l.comp_w1 + (k + 1) * NUM_FEATURES];
                let pre = w[l.comp_b1 + k] + row.iter().zip(&input).map(|(a, b)| a * b).sum::<f64>();
                pre.tanh()
            })
            .collect();
        let out = (0..self.config.component_output)
            .map(|o| {
                let row = &w[l.comp_w2 + o * COMPONENT_HIDDEN..l.comp_w2 + (o + 1) * COMPONENT_HIDDEN];
                w[l.comp_b2 + o] + row.iter().zip(&hidden).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect();
        (input, hidden, out)
    }

    /// The paraphrase component's output for `f` (zero input when absent).
    pub fn chirps_component(&self, f: Option<&FeatureVector>) -> Vec<f64> {
        self.component_forward(f).2
    }

    fn forward(&self, p: &PairInput<'_>) -> Forward {
        let l = self.config.layout();
        let (comp_in, comp_hidden, comp_out) = self.component_forward(p.features);
        let mut x = Vec::with_capacity(l.input);
        x.extend_from_slice(p.left);
        x.extend_from_slice(p.right);
        x.extend(p.left.iter().zip(p.right).map(|(a, b)| a * b));
        x.extend_from_slice(p.binary);
        x.extend_from_slice(&comp_out);
        let w = &self.params;
        let hidden: Vec<f64> = (0..self.config.scorer_hidden)
            .map(|k| {
                let row = &w[l.sc_w1 + k * l.input..l.sc_w1 + (k + 1) * l.input];
                (w[l.sc_b1 + k] + row.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>()).tanh()
            })
            .collect();
        let z = w[l.sc_b2]
            + hidden
                .iter()
                .enumerate()
                .map(|(k, h)| w[l.sc_w2 + k] * h)
                .sum::<f64>();
        Forward {
            comp_in,
            comp_hidden,
            x,
            hidden,
            z,
        }
    }

    /// Probability that the two mentions corefer.
    pub fn score_pair(&self, p: &PairInput<'_>) -> Result<f64> {
        self.check(p)?;
        Ok(sigmoid(self.forward(p).z))
    }

    /// Mean binary cross-entropy over the batch.
    pub fn loss(&self, batch: &[LabeledPair<'_>]) -> Result<f64> {
        let mut total = 0.0;
        for lp in batch {
            self.check(&lp.input)?;
            let z = self.forward(&lp.input).z;
            total += softplus(z) - if lp.label { z } else { 0.0 };
        }
        Ok(total / batch.len().max(1) as f64)
    }

    /// Mean loss and its gradient with respect to every parameter.
    pub fn loss_and_grad(&self, batch: &[LabeledPair<'_>]) -> Result<(f64, Vec<f64>)> {
        let l = self.config.layout();
        let w = &self.params;
        let mut grad = vec![0.0; l.total];
        let mut total = 0.0;
        let scale = 1.0 / batch.len().max(1) as f64;
        let comp_out = self.config.component_width();
        for lp in batch {
            self.check(&lp.input)?;
            let fw = self.forward(&lp.input);
            let y = if lp.label { 1.0 } else { 0.0 };
            total += softplus(fw.z) - y * fw.z;
            let dz = (sigmoid(fw.z) - y) * scale;

            grad[l.sc_b2] += dz;
            let mut dx = vec![0.0; l.input];
            for k in 0..self.config.scorer_hidden {
                grad[l.sc_w2 + k] += dz * fw.hidden[k];
                let dpre = dz * w[l.sc_w2 + k] * (1.0 - fw.hidden[k] * fw.hidden[k]);
                grad[l.sc_b1 + k] += dpre;
                let row = l.sc_w1 + k * l.input;
                for (i, xi) in fw.x.iter().enumerate() {
                    grad[row + i] += dpre * xi;
                    dx[i] += dpre * w[row + i];
                }
            }

            if comp_out > 0 {
                let dc = &dx[l.input - comp_out..];
                let mut dh = [0.0; COMPONENT_HIDDEN];
                for (o, &g) in dc.iter().enumerate() {
                    grad[l.comp_b2 + o] += g;
                    let row = l.comp_w2 + o * COMPONENT_HIDDEN;
                    for (k, dhk) in dh.iter_mut().enumerate() {
                        grad[row + k] += g * fw.comp_hidden[k];
                        *dhk += g * w[row + k];
                    }
                }
                for (k, dhk) in dh.iter().enumerate() {
                    let dpre = dhk * (1.0 - fw.comp_hidden[k] * fw.comp_hidden[k]);
                    grad[l.comp_b1 + k] += dpre;
                    let row = l.comp_w1 + k * NUM_FEATURES;
                    for (i, fi) in fw.comp_in.iter().enumerate() {
                        grad[row + i] += dpre * fi;
                    }
                }
            }
        }
        Ok((total * scale, grad))
    }

    /// One gradient step. Returns the loss before the step.
    pub fn step(&mut self, batch: &[LabeledPair<'_>]) -> Result<f64> {
        let (loss, grad) = self.loss_and_grad(batch)?;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            return Err(Error::Training(format!(
                "loss diverged (loss = {loss}, gradient norm = {norm}, learning rate = {})",
                self.config.learning_rate
            )));
        }
        let lr = self.config.learning_rate;
        for (p, g) in self.params.iter_mut().zip(&grad) {
            *p -= lr * g;
        }
        Ok(loss)
    }
}

/// Initialize from `config` and run `config.epochs` full-batch steps.
/// Returns the scorer and the per-epoch loss trace (loss before each step).
pub fn train_scorer(batch: &[LabeledPair<'_>], config: ScorerConfig) -> Result<(PairScorer, Vec<f64>)> {
    let pos = batch.iter().filter(|p| p.label).count();
    if pos == 0 || pos == batch.len() {
        return Err(Error::InvalidInput("scorer training needs both classes".into()));
    }
    let mut scorer = PairScorer::new(config)?;
    let mut trace = Vec::with_capacity(scorer.config.epochs);
    for _ in 0..scorer.config.epochs {
        trace.push(scorer.step(batch)?);
    }
    Ok((scorer, trace))
}

/// Average-linkage agglomeration over a symmetric score matrix. Starting
/// from singletons, repeatedly merge the cluster pair with the highest mean
/// pairwise score while that mean exceeds `threshold`. Ties go to the pair
/// whose smallest member indices are lexicographically smallest, so callers
/// should order items by id.
pub fn agglomerative_cluster(scores: &[Vec<f64>], threshold: f64) -> Vec<Vec<usize>> {
    let n = scores.len();
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    // Sum of pairwise scores between clusters a and b.
    let mut sums: Vec<Vec<f64>> = scores.to_vec();
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let mean = sums[a][b] / (clusters[a].len() * clusters[b].len()) as f64;
                if mean > threshold && best.map_or(true, |(m, _, _)| mean > m) {
                    best = Some((mean, a, b));
                }
            }
        }
        let Some((_, a, b)) = best else { break };
        let absorbed = clusters.remove(b);
        clusters[a].extend(absorbed);
        clusters[a].sort_unstable();
        let row_b = sums.remove(b);
        for (k, row) in sums.iter_mut().enumerate() {
            let vb = row.remove(b);
            if k != a {
                row[a] += vb;
            }
        }
        for (k, v) in row_b.iter().enumerate() {
            if k == b || k == a {
                continue;
            }
            let k2 = if k > b { k - 1 } else { k };
            sums[a][k2] += v;
        }
        sums[a][a] = 0.0;
        // Clusters stay ordered by smallest member: merging into `a` keeps
        // its minimum, removing `b` shifts later clusters down.
    }
    clusters
}

/// One line of `mentions.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MentionRecord {
    pub id: String,
    pub topic: String,
    pub document: String,
    pub span: Span,
    pub lemma: String,
    pub vector: Vec<f64>,
}

pub fn load_mentions(path: &Path) -> Result<Vec<MentionRecord>> {
    let mentions: Vec<MentionRecord> = read_jsonl(path)?;
    if let Some(first) = mentions.first() {
        let d = first.vector.len();
        if let Some(bad) = mentions.iter().find(|m| m.vector.len() != d) {
            return Err(Error::InvalidInput(format!(
                "mention {} has {} dims, expected {d}",
                bad.id,
                bad.vector.len()
            )));
        }
    }
    if let Some(bad) = mentions.iter().find(|m| m.vector.iter().any(|v| !v.is_finite())) {
        return Err(Error::InvalidInput(format!("mention {} has a non-finite entry", bad.id)));
    }
    Ok(mentions)
}

/// Resource feature vectors keyed by sorted lemma pair.
pub type ResourceFeatures = BTreeMap<(String, String), FeatureVector>;

/// One line of a resource feature file (`resource.jsonl`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub lemmas: (String, String),
    pub features: FeatureVector,
}

pub fn load_resource(path: &Path) -> Result<ResourceFeatures> {
    let records: Vec<ResourceRecord> = read_jsonl(path)?;
    let mut out = ResourceFeatures::new();
    for r in records {
        let key = lemma_pair(&r.lemmas.0, &r.lemmas.1);
        if out.insert(key.clone(), r.features).is_some() {
            return Err(Error::Integrity(format!("duplicate resource lemma pair {key:?}")));
        }
    }
    Ok(out)
}

/// Default binary pair features: identical lemma, same document.
pub fn binary_features(a: &MentionRecord, b: &MentionRecord) -> [f64; 2] {
    [
        f64::from(u8::from(a.lemma.to_lowercase() == b.lemma.to_lowercase())),
        f64::from(u8::from(a.document == b.document)),
    ]
}

/// Within-topic mention pairs, as index pairs `(i, j)` with `i < j` and
/// their binary features.
pub struct TopicPairs<'a> {
    pub mentions: &'a [MentionRecord],
    pub pairs: Vec<(usize, usize)>,
    binaries: Vec<[f64; 2]>,
    features: Vec<Option<&'a FeatureVector>>,
}

impl<'a> TopicPairs<'a> {
    pub fn new(mentions: &'a [MentionRecord], resource: &'a ResourceFeatures) -> Self {
        let mut pairs = Vec::new();
        for i in 0..mentions.len() {
            for j in i + 1..mentions.len() {
                if mentions[i].topic == mentions[j].topic {
                    pairs.push((i, j));
                }
            }
        }
        let binaries = pairs
            .iter()
            .map(|&(i, j)| binary_features(&mentions[i], &mentions[j]))
            .collect();
        let features = pairs
            .iter()
            .map(|&(i, j)| resource.get(&lemma_pair(&mentions[i].lemma, &mentions[j].lemma)))
            .collect();
        TopicPairs {
            mentions,
            pairs,
            binaries,
            features,
        }
    }

    pub fn input(&self, k: usize) -> PairInput<'_> {
        let (i, j) = self.pairs[k];
        PairInput {
            left: &self.mentions[i].vector,
            right: &self.mentions[j].vector,
            features: self.features[k],
            binary: &self.binaries[k],
        }
    }

    /// Every pair labeled by gold co-membership.
    pub fn labeled(&self, gold: &Clustering) -> Result<Vec<LabeledPair<'_>>> {
        (0..self.pairs.len())
            .map(|k| {
                let (i, j) = self.pairs[k];
                let (a, b) = (&self.mentions[i].id, &self.mentions[j].id);
                if gold.cluster_of(a).is_none() || gold.cluster_of(b).is_none() {
                    return Err(Error::Integrity(format!("mention {a} or {b} has no gold cluster")));
                }
                Ok(LabeledPair {
                    input: self.input(k),
                    label: gold.same_cluster(a, b),
                })
            })
            .collect()
    }
}

/// Cluster each topic's mentions with `scorer`; cluster ids are
/// `topic/smallest-mention-id`.
pub fn cluster_mentions(
    scorer: &PairScorer,
    mentions: &[MentionRecord],
    resource: &ResourceFeatures,
    threshold: f64,
) -> Result<Clustering> {
    let mut by_topic: BTreeMap<&str, Vec<MentionRecord>> = BTreeMap::new();
    for m in mentions {
        by_topic.entry(&m.topic).or_default().push(m.clone());
    }
    let mut out = Clustering::new();
    for (topic, mut group) in by_topic {
        group.sort_by(|a, b| a.id.cmp(&b.id));
        let tp = TopicPairs::new(&group, resource);
        let n = group.len();
        let mut scores = vec![vec![0.0; n]; n];
        for k in 0..tp.pairs.len() {
            let (i, j) = tp.pairs[k];
            let s = scorer.score_pair(&tp.input(k))?;
            scores[i][j] = s;
            scores[j][i] = s;
        }
        for cluster in agglomerative_cluster(&scores, threshold) {
            let name = format!("{topic}/{}", group[cluster[0]].id);
            for i in cluster {
                out.insert(group[i].id.clone(), name.clone())?;
            }
        }
    }
    Ok(out)
}
