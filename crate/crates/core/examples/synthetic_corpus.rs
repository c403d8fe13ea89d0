//! Writes a synthetic paraphrase corpus and synthetic coreference topics.
//!
//! cargo run --example synthetic_corpus -- out/synth [seed]

use std::collections::BTreeSet;
use std::path::PathBuf;

use paracoref::synth::{synthetic_coref, synthetic_corpus, CorefConfig, CorpusConfig};
use paracoref::Result;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "out/synth".into()));
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);

    let corpus_dir = dir.join("corpus");
    std::fs::create_dir_all(&corpus_dir).expect("create output directory");
    let s = synthetic_corpus(&CorpusConfig { seed, ..Default::default() })?;
    s.write(&corpus_dir)?;
    println!(
        "{} tweets, {} entries ({} labeled) -> {}",
        s.corpus.tweets().len(),
        s.corpus.entries().len(),
        s.labels.len(),
        corpus_dir.display()
    );

    // Half the topics for training the scorer, half for clustering.
    let coref = synthetic_coref(&CorefConfig { seed, ..Default::default() })?;
    let coref_dir = dir.join("coref");
    std::fs::create_dir_all(&coref_dir).expect("create output directory");
    coref.write(&coref_dir)?;
    let topics: Vec<&str> = coref.topics().into_iter().collect();
    let (train, test) = topics.split_at(topics.len() / 2);
    for (name, part) in [("train", train), ("test", test)] {
        let keep: BTreeSet<&str> = part.iter().copied().collect();
        let (mentions, gold) = coref.in_topics(&keep);
        paracoref::io::write_jsonl(&coref_dir.join(format!("mentions.{name}.jsonl")), &mentions)?;
        gold.save_jsonl(&coref_dir.join(format!("gold.{name}.jsonl")))?;
    }
    println!("{} mentions in {} topics -> {}", coref.mentions.len(), topics.len(), coref_dir.display());
    Ok(())
}
