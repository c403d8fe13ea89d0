//! Tweet graphs built from support pairs: the per-entry bipartite support
//! graph (connected-component features) and the global tweet graph (clique
//! coverage).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use crate::corpus::{Corpus, ParaphraseEntry, Side};

/// Disjoint-set forest with path compression and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }

    /// Sizes of all components, sorted ascending.
    pub fn component_sizes(&mut self) -> Vec<usize> {
        let n = self.parent.len();
        let roots: Vec<usize> = (0..n).filter(|&i| self.find(i) == i).collect();
        let mut sizes: Vec<usize> = roots.iter().map(|&i| self.size[i]).collect();
        sizes.sort_unstable();
        sizes
    }
}

/// Bipartite graph of one entry's support pairs. Nodes are the tweets
/// appearing in a support pair, sorted by id.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportGraph {
    pub nodes: Vec<String>,
    pub sides: Vec<Side>,
    /// Edges as node-index pairs, duplicates collapsed, `u < v`.
    pub edges: Vec<(usize, usize)>,
}

impl SupportGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn component_sizes(&self) -> Vec<usize> {
        let mut uf = UnionFind::new(self.nodes.len());
        for &(u, v) in &self.edges {
            uf.union(u, v);
        }
        uf.component_sizes()
    }
}

pub fn build_support_graph(corpus: &Corpus, entry: &ParaphraseEntry) -> SupportGraph {
    let sides = corpus.sides(entry);
    let nodes: Vec<String> = sides.keys().cloned().collect();
    let index: BTreeMap<&str, usize> = nodes
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let edges: BTreeSet<(usize, usize)> = entry
        .support_pairs()
        .map(|p| {
            let (a, b) = (index[p.left.as_str()], index[p.right.as_str()]);
            (a.min(b), a.max(b))
        })
        .collect();
    SupportGraph {
        sides: nodes.iter().map(|n| sides[n]).collect(),
        nodes,
        edges: edges.into_iter().collect(),
    }
}

/// Number of components with more than two nodes, and mean component size
/// (0 for an empty graph).
pub fn connected_component_features(g: &SupportGraph) -> (usize, f64) {
    let sizes = g.component_sizes();
    if sizes.is_empty() {
        return (0, 0.0);
    }
    let large = sizes.iter().filter(|&&s| s > 2).count();
    let mean = sizes.iter().sum::<usize>() as f64 / sizes.len() as f64;
    (large, mean)
}

/// Undirected simple graph over every tweet that appears in some support pair.
#[derive(Debug, Clone, Default)]
pub struct GlobalGraph {
    nodes: Vec<String>,
    index: BTreeMap<String, usize>,
    adjacency: Vec<BTreeSet<usize>>,
}

impl GlobalGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node_id(&mut self, id: &str) -> usize {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        let i = self.nodes.len();
        self.nodes.push(id.to_string());
        self.index.insert(id.to_string(), i);
        self.adjacency.push(BTreeSet::new());
        i
    }

    /// Insert an undirected edge. Self loops and duplicates are ignored.
    pub fn add_edge(&mut self, a: &str, b: &str) {
        let (u, v) = (self.node_id(a), self.node_id(b));
        if u != v {
            self.adjacency[u].insert(v);
            self.adjacency[v].insert(u);
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.nodes[i]
    }

    pub fn neighbors(&self, i: usize) -> &BTreeSet<usize> {
        &self.adjacency[i]
    }

    pub fn degree(&self, id: &str) -> usize {
        self.index_of(id).map_or(0, |i| self.adjacency[i].len())
    }

    pub fn has_edge(&self, a: &str, b: &str) -> bool {
        match (self.index_of(a), self.index_of(b)) {
            (Some(u), Some(v)) => self.adjacency[u].contains(&v),
            _ => false,
        }
    }

    pub fn component_count(&self) -> usize {
        let mut uf = UnionFind::new(self.nodes.len());
        for (u, adj) in self.adjacency.iter().enumerate() {
            for &v in adj {
                uf.union(u, v);
            }
        }
        uf.component_sizes().len()
    }

    /// `u<TAB>v` per edge, endpoints and lines sorted by tweet id.
    pub fn to_edge_list(&self) -> String {
        let mut edges = BTreeSet::new();
        for (u, adj) in self.adjacency.iter().enumerate() {
            for &v in adj {
                let (a, b) = (&self.nodes[u], &self.nodes[v]);
                if a < b {
                    edges.insert((a.as_str(), b.as_str()));
                }
            }
        }
        let mut out = String::new();
        for (a, b) in edges {
            let _ = writeln!(out, "{a}\t{b}");
        }
        out
    }

    /// All maximal cliques, each sorted by node index, in lexicographic order.
    pub fn maximal_cliques(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        enumerate_maximal_cliques(self, None, &mut |c| {
            out.push(c.to_vec());
            true
        });
        for c in &mut out {
            c.sort_unstable();
        }
        out.sort();
        out
    }
}

pub fn build_global_graph(corpus: &Corpus) -> GlobalGraph {
    let mut g = GlobalGraph::new();
    for entry in corpus.entries() {
        for p in entry.support_pairs() {
            g.add_edge(&p.left, &p.right);
        }
    }
    g
}

/// Degeneracy ordering (repeatedly remove a minimum-degree node).
fn degeneracy_order(g: &GlobalGraph) -> Vec<usize> {
    let n = g.node_count();
    let mut degree: Vec<usize> = (0..n).map(|i| g.adjacency[i].len()).collect();
    let mut removed = vec![false; n];
    let mut buckets: BTreeSet<(usize, usize)> = (0..n).map(|i| (degree[i], i)).collect();
    let mut order = Vec::with_capacity(n);
    while let Some((_, u)) = buckets.pop_first() {
        removed[u] = true;
        order.push(u);
        for &v in &g.adjacency[u] {
            if !removed[v] {
                buckets.remove(&(degree[v], v));
                degree[v] -= 1;
                buckets.insert((degree[v], v));
            }
        }
    }
    order
}

/// Pivoting Bron-Kerbosch with a degeneracy-ordered outer loop. `emit`
/// returns `false` to stop early; the function returns `false` if it was
/// stopped or ran past `deadline`.
fn enumerate_maximal_cliques(
    g: &GlobalGraph,
    deadline: Option<Instant>,
    emit: &mut dyn FnMut(&[usize]) -> bool,
) -> bool {
    let order = degeneracy_order(g);
    let mut position = vec![0; g.node_count()];
    for (i, &v) in order.iter().enumerate() {
        position[v] = i;
    }
    let mut clique = Vec::new();
    for &v in &order {
        let nbrs = &g.adjacency[v];
        let p: BTreeSet<usize> = nbrs.iter().copied().filter(|&u| position[u] > position[v]).collect();
        let x: BTreeSet<usize> = nbrs.iter().copied().filter(|&u| position[u] < position[v]).collect();
        clique.push(v);
        if !bron_kerbosch(g, &mut clique, p, x, deadline, emit) {
            return false;
        }
        clique.pop();
    }
    true
}

fn bron_kerbosch(
    g: &GlobalGraph,
    clique: &mut Vec<usize>,
    mut p: BTreeSet<usize>,
    mut x: BTreeSet<usize>,
    deadline: Option<Instant>,
    emit: &mut dyn FnMut(&[usize]) -> bool,
) -> bool {
    if p.is_empty() {
        if x.is_empty() {
            return emit(clique);
        }
        return true;
    }
    if deadline.is_some_and(|d| Instant::now() > d) {
        return false;
    }
    // Pivot: node of P ∪ X with most neighbours in P.
    let pivot = p
        .iter()
        .chain(x.iter())
        .copied()
        .max_by_key(|&u| (g.adjacency[u].intersection(&p).count(), std::cmp::Reverse(u)))
        .expect("P nonempty");
    let candidates: Vec<usize> = p.difference(&g.adjacency[pivot]).copied().collect();
    for v in candidates {
        let nbrs = &g.adjacency[v];
        let p_next = p.intersection(nbrs).copied().collect();
        let x_next = x.intersection(nbrs).copied().collect();
        clique.push(v);
        if !bron_kerbosch(g, clique, p_next, x_next, deadline, emit) {
            return false;
        }
        clique.pop();
        p.remove(&v);
        x.insert(v);
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CliqueConfig {
    /// Graphs with more nodes than this skip explicit enumeration.
    pub max_nodes: usize,
    /// Wall-clock budget for enumeration.
    pub timeout: Duration,
}

/// Smallest maximal clique that counts as coverage evidence. Every edge is a
/// 2-clique, so smaller cliques carry no information.
pub const MIN_CLIQUE_SIZE: usize = 3;

impl Default for CliqueConfig {
    fn default() -> Self {
        CliqueConfig {
            max_nodes: 50_000,
            timeout: Duration::from_secs(60),
        }
    }
}

/// Tweet pairs that co-occur in some maximal clique of at least
/// [`MIN_CLIQUE_SIZE`] nodes.
///
/// When enumeration is skipped (cap or timeout) the index falls back to the common-neighbour test, which is equivalent:
/// an edge lies in a maximal clique of size ≥ 3 iff its endpoints share a
/// neighbour. `exact` records whether enumeration completed.
#[derive(Debug, Clone)]
pub struct CliqueIndex {
    covered: Option<BTreeSet<(usize, usize)>>,
    pub exact: bool,
}

impl CliqueIndex {
    pub fn build(g: &GlobalGraph, config: &CliqueConfig) -> Self {
        let fallback = CliqueIndex {
            covered: None,
            exact: false,
        };
        if g.node_count() > config.max_nodes {
            return fallback;
        }
        let deadline = Instant::now().checked_add(config.timeout);
        let mut covered = BTreeSet::new();
        let finished = enumerate_maximal_cliques(g, deadline, &mut |c| {
            if c.len() >= MIN_CLIQUE_SIZE {
                for (i, &a) in c.iter().enumerate() {
                    for &b in &c[i + 1..] {
                        covered.insert((a.min(b), a.max(b)));
                    }
                }
            }
            true
        });
        if !finished {
            return fallback;
        }
        CliqueIndex {
            covered: Some(covered),
            exact: true,
        }
    }

    pub fn covers(&self, g: &GlobalGraph, a: &str, b: &str) -> bool {
        let (Some(u), Some(v)) = (g.index_of(a), g.index_of(b)) else {
            return false;
        };
        match &self.covered {
            Some(set) => set.contains(&(u.min(v), u.max(v))),
            None => {
                g.adjacency[u].contains(&v)
                    && g.adjacency[u].intersection(&g.adjacency[v]).next().is_some()
            }
        }
    }
}

/// Number of the entry's support pairs whose tweets share a maximal clique of size ≥ 3.
pub fn clique_coverage(entry: &ParaphraseEntry, g: &GlobalGraph, index: &CliqueIndex) -> usize {
    entry
        .support_pairs()
        .filter(|p| index.covers(g, &p.left, &p.right))
        .count()
}
