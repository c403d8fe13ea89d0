//! Random forest classifier: bootstrap-sampled CART trees with Gini splits
//! over a random feature subset per node, plus a randomized k-fold search
//! over hyperparameters.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_json, write_json};
use crate::rng::{derive_seed, SplitMix64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestHyperparams {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
    pub features_per_split: usize,
    pub seed: u64,
}

impl Default for ForestHyperparams {
    /// 157 trees, depth 8, leaf 1, split 10; `floor(sqrt(17)) = 4` features per split.
    fn default() -> Self {
        ForestHyperparams {
            n_estimators: 157,
            max_depth: 8,
            min_samples_leaf: 1,
            min_samples_split: 10,
            features_per_split: 4,
            seed: 0,
        }
    }
}

impl ForestHyperparams {
    pub fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 {
            return Err(Error::InvalidInput("n_estimators must be positive".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::InvalidInput("min_samples_leaf must be positive".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::InvalidInput("min_samples_split must be at least 2".into()));
        }
        if self.features_per_split == 0 {
            return Err(Error::InvalidInput("features_per_split must be positive".into()));
        }
        Ok(())
    }
}

/// Tree node, serialized as a bare array: a split is
/// `[feature, threshold, left, right]` (rows with `x[feature] < threshold`
/// go left), a leaf is `[positive_probability, n_samples]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Node {
    Split(usize, f64, usize, usize),
    Leaf(f64, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    /// Node 0 is the root.
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf(p, _) => return p,
                Node::Split(f, t, l, r) => i = if x[f] < t { l } else { r },
            }
        }
    }

    /// Depth of the deepest leaf (a lone root leaf has depth 0).
    pub fn depth(&self) -> usize {
        let mut max = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((i, d)) = stack.pop() {
            match self.nodes[i] {
                Node::Leaf(..) => max = max.max(d),
                Node::Split(_, _, l, r) => {
                    stack.push((l, d + 1));
                    stack.push((r, d + 1));
                }
            }
        }
        max
    }

    pub fn leaves(&self) -> impl Iterator<Item = (f64, usize)> + '_ {
        self.nodes.iter().filter_map(|n| match *n {
            Node::Leaf(p, c) => Some((p, c)),
            Node::Split(..) => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub n_features: usize,
    pub hyperparams: ForestHyperparams,
    pub trees: Vec<DecisionTree>,
}

impl Forest {
    /// Mean positive-class leaf probability over trees.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::InvalidInput(format!(
                "expected {} features, got {}",
                self.n_features,
                x.len()
            )));
        }
        let sum: f64 = self.trees.iter().map(|t| t.predict_proba(x)).sum();
        Ok(sum / self.trees.len() as f64)
    }

    pub fn predict(&self, x: &[f64]) -> Result<bool> {
        Ok(self.predict_proba(x)? >= 0.5)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    /// Number of splits on each feature across all trees.
    pub fn split_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_features];
        for t in &self.trees {
            for n in &t.nodes {
                if let Node::Split(f, ..) = n {
                    counts[*f] += 1;
                }
            }
        }
        counts
    }
}

fn check_data(x: &[Vec<f64>], y: &[bool]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "{} rows but {} labels",
            x.len(),
            y.len()
        )));
    }
    let n_features = x.first().map_or(0, Vec::len);
    if n_features == 0 {
        return Err(Error::InvalidInput("empty feature matrix".into()));
    }
    if x.iter().any(|r| r.len() != n_features) {
        return Err(Error::InvalidInput("ragged feature matrix".into()));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite feature value".into()));
    }
    let pos = y.iter().filter(|&&b| b).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::InvalidInput("training data must contain both classes".into()));
    }
    Ok(n_features)
}

pub fn train(x: &[Vec<f64>], y: &[bool], hp: &ForestHyperparams) -> Result<Forest> {
    hp.validate()?;
    let n_features = check_data(x, y)?;
    let trees = (0..hp.n_estimators)
        .into_par_iter()
        .map(|t| {
            let mut rng = SplitMix64::new(derive_seed(hp.seed, t as u64));
            let sample: Vec<usize> = (0..x.len()).map(|_| rng.below(x.len())).collect();
            TreeBuilder {
                x,
                y,
                hp,
                n_features,
                rng,
                nodes: Vec::new(),
            }
            .build(sample)
        })
        .collect();
    Ok(Forest {
        n_features,
        hyperparams: *hp,
        trees,
    })
}

/// Best split found on a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

/// Highest-Gini-gain threshold over `features` for the rows in `idx`
/// (repeats allowed). Thresholds are midpoints between consecutive distinct
/// values; both children must keep at least `min_leaf` rows. Ties keep the
/// first candidate in feature order, then ascending threshold.
pub fn best_split(
    x: &[Vec<f64>],
    y: &[bool],
    idx: &[usize],
    features: &[usize],
    min_leaf: usize,
) -> Option<SplitChoice> {
    let n = idx.len();
    let total_pos = idx.iter().filter(|&&i| y[i]).count();
    let parent = gini(total_pos, n);
    let mut best: Option<SplitChoice> = None;
    let mut order: Vec<usize> = idx.to_vec();
    for &f in features {
        order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]));
        let mut left_pos = 0;
        for k in 0..n.saturating_sub(1) {
            left_pos += usize::from(y[order[k]]);
            let (lo, hi) = (x[order[k]][f], x[order[k + 1]][f]);
            if lo == hi {
                continue;
            }
            let (nl, nr) = (k + 1, n - k - 1);
            if nl < min_leaf || nr < min_leaf {
                continue;
            }
            let gain = parent
                - (nl as f64 / n as f64) * gini(left_pos, nl)
                - (nr as f64 / n as f64) * gini(total_pos - left_pos, nr);
            if best.map_or(true, |b| gain > b.gain) {
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold <= lo {
                    threshold = hi;
                }
                best = Some(SplitChoice {
                    feature: f,
                    threshold,
                    gain,
                });
            }
        }
    }
    best
}

struct TreeBuilder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [bool],
    hp: &'a ForestHyperparams,
    n_features: usize,
    rng: SplitMix64,
    nodes: Vec<Node>,
}

impl TreeBuilder<'_> {
    fn build(mut self, sample: Vec<usize>) -> DecisionTree {
        self.grow(sample, 0);
        DecisionTree { nodes: self.nodes }
    }

    fn leaf(&mut self, idx: &[usize]) -> usize {
        let pos = idx.iter().filter(|&&i| self.y[i]).count();
        self.nodes.push(Node::Leaf(pos as f64 / idx.len() as f64, idx.len()));
        self.nodes.len() - 1
    }

    /// Features to inspect: a random permutation, keeping the first
    /// `features_per_split` that are non-constant on this node.
    fn candidate_features(&mut self, idx: &[usize]) -> Vec<usize> {
        let mut perm: Vec<usize> = (0..self.n_features).collect();
        self.rng.shuffle(&mut perm);
        let x = self.x;
        perm.into_iter()
            .filter(|&f| {
                let first = x[idx[0]][f];
                idx.iter().any(|&i| x[i][f] != first)
            })
            .take(self.hp.features_per_split)
            .collect()
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let n = idx.len();
        let pos = idx.iter().filter(|&&i| self.y[i]).count();
        if depth >= self.hp.max_depth
            || n < self.hp.min_samples_split
            || n < 2 * self.hp.min_samples_leaf
            || pos == 0
            || pos == n
        {
            return self.leaf(&idx);
        }
        let features = self.candidate_features(&idx);
        let Some(split) = best_split(self.x, self.y, &idx, &features, self.hp.min_samples_leaf)
        else {
            return self.leaf(&idx);
        };
        let (left, right): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.x[i][split.feature] < split.threshold);
        let me = self.nodes.len();
        self.nodes.push(Node::Leaf(0.0, 0));
        let l = self.grow(left, depth + 1);
        let r = self.grow(right, depth + 1);
        self.nodes[me] = Node::Split(split.feature, split.threshold, l, r);
        me
    }
}

/// Candidate values per hyperparameter; each search iteration draws every
/// parameter uniformly and independently.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSpace {
    pub n_estimators: Vec<usize>,
    pub max_depth: Vec<usize>,
    pub min_samples_leaf: Vec<usize>,
    pub min_samples_split: Vec<usize>,
    pub features_per_split: Vec<usize>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            n_estimators: (50..=300).collect(),
            max_depth: (2..=16).collect(),
            min_samples_leaf: (1..=8).collect(),
            min_samples_split: (2..=16).collect(),
            features_per_split: vec![4],
        }
    }
}

impl SearchSpace {
    pub fn singleton(hp: &ForestHyperparams) -> Self {
        SearchSpace {
            n_estimators: vec![hp.n_estimators],
            max_depth: vec![hp.max_depth],
            min_samples_leaf: vec![hp.min_samples_leaf],
            min_samples_split: vec![hp.min_samples_split],
            features_per_split: vec![hp.features_per_split],
        }
    }

    fn sample(&self, rng: &mut SplitMix64, seed: u64) -> Result<ForestHyperparams> {
        fn pick(rng: &mut SplitMix64, v: &[usize], name: &str) -> Result<usize> {
            if v.is_empty() {
                return Err(Error::InvalidInput(format!("empty search range for {name}")));
            }
            Ok(v[rng.below(v.len())])
        }
        Ok(ForestHyperparams {
            n_estimators: pick(rng, &self.n_estimators, "n_estimators")?,
            max_depth: pick(rng, &self.max_depth, "max_depth")?,
            min_samples_leaf: pick(rng, &self.min_samples_leaf, "min_samples_leaf")?,
            min_samples_split: pick(rng, &self.min_samples_split, "min_samples_split")?,
            features_per_split: pick(rng, &self.features_per_split, "features_per_split")?,
            seed,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: ForestHyperparams,
    pub best_accuracy: f64,
    /// Every sampled configuration with its mean fold accuracy, in sampling order.
    pub evaluated: Vec<(ForestHyperparams, f64)>,
}

const FOLD_RETRIES: usize = 10;

/// Shuffled k-fold assignment in which every held-out fold and every
/// training complement contains both classes.
pub fn assign_folds(y: &[bool], folds: usize, rng: &mut SplitMix64) -> Result<Vec<usize>> {
    if folds < 2 || y.len() < folds {
        return Err(Error::InvalidInput(format!(
            "{} rows cannot be split into {folds} folds",
            y.len()
        )));
    }
    let total_pos = y.iter().filter(|&&b| b).count();
    for _ in 0..FOLD_RETRIES {
        let mut order: Vec<usize> = (0..y.len()).collect();
        rng.shuffle(&mut order);
        let mut assignment = vec![0; y.len()];
        for (k, &i) in order.iter().enumerate() {
            assignment[i] = k % folds;
        }
        let ok = (0..folds).all(|f| {
            let size = assignment.iter().filter(|&&a| a == f).count();
            let pos = (0..y.len()).filter(|&i| assignment[i] == f && y[i]).count();
            let train_pos = total_pos - pos;
            let train_size = y.len() - size;
            pos > 0 && pos < size && train_pos > 0 && train_pos < train_size
        });
        if ok {
            return Ok(assignment);
        }
    }
    Err(Error::InvalidInput(format!(
        "could not draw {folds} folds with both classes in each after {FOLD_RETRIES} attempts"
    )))
}

/// Mean held-out accuracy over the given fold assignment.
pub fn cross_val_accuracy(
    x: &[Vec<f64>],
    y: &[bool],
    assignment: &[usize],
    folds: usize,
    hp: &ForestHyperparams,
) -> Result<f64> {
    let mut total = 0.0;
    for f in 0..folds {
        let (mut tx, mut ty, mut vx, mut vy) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for i in 0..y.len() {
            if assignment[i] == f {
                vx.push(x[i].clone());
                vy.push(y[i]);
            } else {
                tx.push(x[i].clone());
                ty.push(y[i]);
            }
        }
        let forest = train(&tx, &ty, hp)?;
        let mut correct = 0;
        for (row, &label) in vx.iter().zip(&vy) {
            if forest.predict(row)? == label {
                correct += 1;
            }
        }
        total += correct as f64 / vy.len() as f64;
    }
    Ok(total / folds as f64)
}

/// Sample `n_iter` configurations and keep the one with the best mean
/// `folds`-fold accuracy (first sampled wins ties). All configurations are
/// scored on the same fold assignment and trained with `seed`.
pub fn randomized_search(
    x: &[Vec<f64>],
    y: &[bool],
    space: &SearchSpace,
    n_iter: usize,
    folds: usize,
    seed: u64,
) -> Result<SearchResult> {
    check_data(x, y)?;
    if n_iter == 0 {
        return Err(Error::InvalidInput("n_iter must be positive".into()));
    }
    let mut rng = SplitMix64::new(seed);
    let assignment = assign_folds(y, folds, &mut rng)?;
    let mut evaluated = Vec::with_capacity(n_iter);
    for _ in 0..n_iter {
        let hp = space.sample(&mut rng, seed)?;
        let acc = cross_val_accuracy(x, y, &assignment, folds, &hp)?;
        evaluated.push((hp, acc));
    }
    let (best, best_accuracy) = evaluated
        .iter()
        .copied()
        .fold(None, |acc: Option<(ForestHyperparams, f64)>, (hp, a)| match acc {
            Some((_, b)) if b >= a => acc,
            _ => Some((hp, a)),
        })
        .expect("n_iter > 0");
    Ok(SearchResult {
        best,
        best_accuracy,
        evaluated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (Vec<Vec<f64>>, Vec<bool>) {
        let x: Vec<Vec<f64>> = (-10..10).map(|i| vec![i as f64, (i * 7 % 5) as f64]).collect();
        let y = x.iter().map(|r| r[0] >= 0.0).collect();
        (x, y)
    }

    #[test]
    fn separable_data_is_fit_exactly() {
        let (x, y) = toy();
        let hp = ForestHyperparams {
            n_estimators: 15,
            min_samples_split: 2,
            ..Default::default()
        };
        let forest = train(&x, &y, &hp).unwrap();
        for (row, &label) in x.iter().zip(&y) {
            assert_eq!(forest.predict(row).unwrap(), label);
        }
    }

    #[test]
    fn single_class_is_rejected() {
        let x = vec![vec![1.0], vec![2.0]];
        assert!(train(&x, &[true, true], &ForestHyperparams::default()).is_err());
    }

    #[test]
    fn wrong_width_is_rejected() {
        let (x, y) = toy();
        let forest = train(&x, &y, &ForestHyperparams { n_estimators: 2, ..Default::default() }).unwrap();
        assert!(forest.predict_proba(&[1.0]).is_err());
    }

    #[test]
    fn averaging_and_unanimity() {
        let leaf = |p| DecisionTree {
            nodes: vec![Node::Leaf(p, 1)],
        };
        let mut forest = Forest {
            n_features: 1,
            hyperparams: ForestHyperparams::default(),
            trees: vec![leaf(1.0), leaf(0.0)],
        };
        assert_eq!(forest.predict_proba(&[0.0]).unwrap(), 0.5);
        forest.trees = vec![leaf(1.0), leaf(1.0), leaf(1.0)];
        assert_eq!(forest.predict_proba(&[0.0]).unwrap(), 1.0);
    }

    #[test]
    fn json_round_trip_keeps_nodes_as_arrays() {
        let (x, y) = toy();
        let forest = train(&x, &y, &ForestHyperparams { n_estimators: 3, ..Default::default() }).unwrap();
        let json = serde_json::to_string(&forest).unwrap();
        assert!(json.contains("\"nodes\":[["));
        let back: Forest = serde_json::from_str(&json).unwrap();
        assert_eq!(back, forest);
    }

    #[test]
    fn depth_zero_gives_stumps() {
        let (x, y) = toy();
        let hp = ForestHyperparams {
            n_estimators: 4,
            max_depth: 0,
            ..Default::default()
        };
        let forest = train(&x, &y, &hp).unwrap();
        assert!(forest.trees.iter().all(|t| t.nodes.len() == 1));
    }

    #[test]
    fn singleton_space_returns_its_config() {
        let (x, y) = toy();
        let hp = ForestHyperparams {
            n_estimators: 5,
            seed: 3,
            ..Default::default()
        };
        let res = randomized_search(&x, &y, &SearchSpace::singleton(&hp), 2, 3, 3).unwrap();
        assert_eq!(res.best, hp);
    }
}
