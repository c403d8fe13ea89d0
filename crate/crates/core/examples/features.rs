//! Feature vectors for every entry of a corpus directory.
//!
//! cargo run --example features -- [corpus_dir] [decisions.jsonl]
//!
//! Without a decisions file, coreference decisions fall back to lexical
//! identity of predicate and argument text.

use std::path::PathBuf;

use paracoref::coref_decisions::DecisionStore;
use paracoref::graph::CliqueConfig;
use paracoref::features::FeatureContext;
use paracoref::{Corpus, Result, FEATURE_NAMES};

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/small");
    let dir = args.next().map(PathBuf::from).unwrap_or_else(|| fixtures.clone());
    let corpus = Corpus::load(&dir)?;
    let decisions = match args.next() {
        Some(p) => DecisionStore::load(&PathBuf::from(p))?,
        None if dir == fixtures => DecisionStore::load(&fixtures.join("decisions.jsonl"))?,
        None => DecisionStore::lexical_identity(&corpus),
    };
    let ctx = FeatureContext::new(&corpus, &decisions, 0.26, &CliqueConfig::default())?;
    for (id, v) in ctx.assemble_all()? {
        println!("{id}");
        for (name, x) in FEATURE_NAMES.iter().zip(v.as_slice()) {
            println!("  {name:<28} {x}");
        }
    }
    Ok(())
}
