//! Brute-force reference implementations shared by the property tests and
//! the acceptance run.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use paracoref::coref_metrics::Clustering;
use paracoref::rng::SplitMix64;

/// Connected components by depth-first search over an edge list:
/// (components with more than two nodes, mean component size).
pub fn components(edges: &[(String, String)]) -> (usize, f64) {
    let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (a, b) in edges {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    let mut seen = BTreeSet::new();
    let mut sizes = Vec::new();
    for &start in adj.keys() {
        if !seen.insert(start) {
            continue;
        }
        let mut stack = vec![start];
        let mut size = 0;
        while let Some(v) = stack.pop() {
            size += 1;
            for &w in &adj[v] {
                if seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        sizes.push(size);
    }
    if sizes.is_empty() {
        return (0, 0.0);
    }
    let big = sizes.iter().filter(|&&s| s > 2).count();
    (big, sizes.iter().sum::<usize>() as f64 / sizes.len() as f64)
}

/// Every maximal clique of an `n`-node graph by checking all node subsets.
pub fn maximal_cliques(n: usize, adj: &[Vec<bool>]) -> Vec<Vec<usize>> {
    let is_clique = |mask: u32| {
        (0..n).all(|i| {
            mask & (1 << i) == 0 || (i + 1..n).all(|j| mask & (1 << j) == 0 || adj[i][j])
        })
    };
    let mut out = Vec::new();
    for mask in 1u32..(1 << n) {
        if !is_clique(mask) {
            continue;
        }
        let maximal = (0..n).all(|v| mask & (1 << v) != 0 || !is_clique(mask | (1 << v)));
        if maximal {
            out.push((0..n).filter(|&i| mask & (1 << i) != 0).collect());
        }
    }
    out.sort();
    out
}

/// Whether `a` and `b` share a maximal clique of at least three nodes.
pub fn share_big_clique(cliques: &[Vec<usize>], a: usize, b: usize) -> bool {
    cliques
        .iter()
        .any(|c| c.len() >= 3 && c.contains(&a) && c.contains(&b))
}

/// Accuracy-maximizing threshold by enumerating every cut of the sorted
/// distinct scores; ties go to the smallest threshold.
pub fn best_cut(scores: &[f64], labels: &[bool], lower: f64, upper: f64) -> f64 {
    let mut distinct: Vec<f64> = scores.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let mut candidates = vec![lower];
    for w in distinct.windows(2) {
        candidates.push((w[0] + w[1]) / 2.0);
    }
    candidates.push(upper);
    let accuracy = |t: f64| {
        scores
            .iter()
            .zip(labels)
            .filter(|(&s, &y)| (s >= t) == y)
            .count()
    };
    let mut best = (0, f64::INFINITY);
    for t in candidates {
        let a = accuracy(t);
        if a > best.0 || (a == best.0 && t < best.1) {
            best = (a, t);
        }
    }
    best.1
}

pub fn accuracy_at(scores: &[f64], labels: &[bool], t: f64) -> usize {
    scores
        .iter()
        .zip(labels)
        .filter(|(&s, &y)| (s >= t) == y)
        .count()
}

fn phi4(g: &BTreeSet<&str>, s: &BTreeSet<&str>) -> f64 {
    2.0 * g.intersection(s).count() as f64 / (g.len() + s.len()) as f64
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Maximum total φ4 similarity over every one-to-one cluster alignment.
pub fn ceaf_e_total(gold: &Clustering, sys: &Clustering) -> f64 {
    let g: Vec<Vec<String>> = gold.clusters();
    let s: Vec<Vec<String>> = sys.clusters();
    let gs: Vec<BTreeSet<&str>> = g.iter().map(|c| c.iter().map(String::as_str).collect()).collect();
    let ss: Vec<BTreeSet<&str>> = s.iter().map(|c| c.iter().map(String::as_str).collect()).collect();
    let n = gs.len().max(ss.len());
    let mut best = 0.0_f64;
    for perm in permutations(n) {
        let total: f64 = (0..gs.len())
            .filter(|&i| perm[i] < ss.len())
            .map(|i| phi4(&gs[i], &ss[perm[i]]))
            .sum();
        best = best.max(total);
    }
    best
}

/// Pairwise-link diff by enumerating every mention pair.
pub fn diff_pairs(
    gold: &Clustering,
    base: &Clustering,
    new: &Clustering,
) -> (Vec<(String, String)>, Vec<(String, String)>) {
    let ms: Vec<&str> = gold.mentions().collect();
    let (mut fp, mut fnr) = (Vec::new(), Vec::new());
    for i in 0..ms.len() {
        for j in i + 1..ms.len() {
            let (a, b) = (ms[i], ms[j]);
            let (g, o, n) = (gold.same_cluster(a, b), base.same_cluster(a, b), new.same_cluster(a, b));
            if o && !n && !g {
                fp.push((a.to_string(), b.to_string()));
            }
            if g && n && !o {
                fnr.push((a.to_string(), b.to_string()));
            }
        }
    }
    (fp, fnr)
}

/// Random partition of `n` mentions into at most `k` clusters.
pub fn random_clustering(rng: &mut SplitMix64, n: usize, k: usize, prefix: &str) -> Clustering {
    Clustering::from_assignments(
        (0..n).map(|i| (format!("m{i:02}"), format!("{prefix}{}", rng.below(k)))),
    )
    .unwrap()
}

fn gini(rows: &[usize], y: &[bool]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let p = rows.iter().filter(|&&i| y[i]).count() as f64 / rows.len() as f64;
    1.0 - p * p - (1.0 - p) * (1.0 - p)
}

/// Largest weighted-Gini decrease over every feature and every midpoint
/// threshold with both children holding at least `min_leaf` rows.
pub fn best_gini_gain(x: &[Vec<f64>], y: &[bool], rows: &[usize], features: &[usize], min_leaf: usize) -> Option<f64> {
    let mut best: Option<f64> = None;
    for &f in features {
        let mut vals: Vec<f64> = rows.iter().map(|&i| x[i][f]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            if let Some(g) = split_gain(x, y, rows, f, t, min_leaf) {
                best = Some(best.map_or(g, |b: f64| b.max(g)));
            }
        }
    }
    best
}

/// Weighted-Gini decrease of splitting `rows` at `x[f] < t`.
pub fn split_gain(x: &[Vec<f64>], y: &[bool], rows: &[usize], f: usize, t: f64, min_leaf: usize) -> Option<f64> {
    let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x[i][f] < t);
    if l.len() < min_leaf || r.len() < min_leaf || l.is_empty() || r.is_empty() {
        return None;
    }
    let n = rows.len() as f64;
    Some(gini(rows, y) - l.len() as f64 / n * gini(&l, y) - r.len() as f64 / n * gini(&r, y))
}

/// Closed-form AP when all `p` positives rank after all `n - p` negatives.
pub fn ap_positives_last(n: usize, p: usize) -> f64 {
    (1..=p).map(|i| i as f64 / (n - p + i) as f64).sum::<f64>() / p as f64
}
