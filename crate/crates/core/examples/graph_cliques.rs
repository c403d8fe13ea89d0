//! Support-graph components and clique coverage on the fixture corpus.
//!
//! cargo run --example graph_cliques -- [corpus_dir]

use std::path::PathBuf;

use paracoref::graph::{
    build_global_graph, build_support_graph, clique_coverage, connected_component_features,
    CliqueConfig, CliqueIndex,
};
use paracoref::{Corpus, Result};

fn main() -> Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/small"));
    let corpus = Corpus::load(&dir)?;
    let global = build_global_graph(&corpus);
    let cliques: Vec<Vec<&str>> = global
        .maximal_cliques()
        .into_iter()
        .filter(|c| c.len() >= 3)
        .map(|c| c.into_iter().map(|i| global.name(i)).collect())
        .collect();
    println!("maximal cliques of size >= 3: {cliques:?}");

    let index = CliqueIndex::build(&global, &CliqueConfig::default());
    let capped = CliqueIndex::build(&global, &CliqueConfig { max_nodes: 0, ..Default::default() });
    println!("{:<6} {:>5} {:>5} {:>8} {:>7} {:>9}", "entry", "nodes", "big", "avg", "clique", "fallback");
    for e in corpus.entries() {
        let g = build_support_graph(&corpus, e);
        let (big, avg) = connected_component_features(&g);
        println!(
            "{:<6} {:>5} {:>5} {:>8.3} {:>7} {:>9}",
            e.id,
            g.node_count(),
            big,
            avg,
            clique_coverage(e, &global, &index),
            clique_coverage(e, &global, &capped)
        );
    }
    Ok(())
}
