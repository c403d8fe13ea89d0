//! Pairwise mention scorer with and without the paraphrase-feature
//! component, trained and evaluated on synthetic coreference topics.
//!
//! cargo run --release --example pair_scorer -- [seed]

use paracoref::coref_metrics::score;
use paracoref::pair_scorer::{cluster_mentions, train_scorer, ScorerConfig, TopicPairs};
use paracoref::synth::{synthetic_coref, CorefConfig};
use paracoref::Result;

fn main() -> Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let data = synthetic_coref(&CorefConfig { seed, ..Default::default() })?;
    let topics: Vec<&str> = data.topics().into_iter().collect();
    let (train, test) = topics.split_at(topics.len() / 2);
    let (train_m, train_gold) = data.in_topics(&train.iter().copied().collect());
    let (test_m, test_gold) = data.in_topics(&test.iter().copied().collect());
    let pairs = TopicPairs::new(&train_m, &data.resource);
    let batch = pairs.labeled(&train_gold)?;
    println!("{} training pairs, {} test mentions", batch.len(), test_m.len());

    for use_chirps in [false, true] {
        let config = ScorerConfig {
            mention_dim: 8,
            scorer_hidden: 16,
            learning_rate: 0.5,
            epochs: 300,
            use_chirps,
            seed,
            ..Default::default()
        };
        let (scorer, trace) = train_scorer(&batch, config)?;
        let sys = cluster_mentions(&scorer, &test_m, &data.resource, 0.5)?;
        let r = score(&test_gold, &sys)?;
        println!(
            "chirps {use_chirps:<5}  loss {:.4} -> {:.4}  CoNLL F1 {:.3}",
            trace[0],
            trace[trace.len() - 1],
            r.conll_f1
        );
    }
    Ok(())
}
