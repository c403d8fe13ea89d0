//! Every pipeline step on synthetic data, as the command-line tool runs them.
//!
//! cargo run --release --example full_pipeline -- [out_dir] [seed]

use std::path::PathBuf;

use paracoref::pipeline::{self, ClusteringFormat, Command, PipelineConfig};
use paracoref::synth::{synthetic_coref, synthetic_corpus, CorefConfig, CorpusConfig};
use paracoref::Result;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let root = PathBuf::from(args.next().unwrap_or_else(|| "out/pipeline".into()));
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);

    let data = root.join("data");
    std::fs::create_dir_all(&data).expect("create output directory");
    synthetic_corpus(&CorpusConfig { seed, ..Default::default() })?.write(&data)?;
    let coref = synthetic_coref(&CorefConfig { seed, ..Default::default() })?;
    let topics: Vec<&str> = coref.topics().into_iter().collect();
    let (train, test) = topics.split_at(topics.len() / 2);
    let (train_m, train_g) = coref.in_topics(&train.iter().copied().collect());
    let (test_m, test_g) = coref.in_topics(&test.iter().copied().collect());
    paracoref::io::write_jsonl(&data.join("mentions.train.jsonl"), &train_m)?;
    paracoref::io::write_jsonl(&data.join("mentions.test.jsonl"), &test_m)?;
    train_g.save_jsonl(&data.join("gold.train.jsonl"))?;
    test_g.save_jsonl(&data.join("gold.test.jsonl"))?;
    paracoref::io::write_jsonl(&data.join("resource.jsonl"), &coref.resource_records())?;

    let mut config = PipelineConfig {
        out_dir: root.join("out"),
        corpus_dir: data.clone(),
        decisions: Some(data.join("decisions.jsonl")),
        annotations: Some(data.join("annotations.jsonl")),
        judgments: Some(data.join("judgments.csv")),
        splits: Some(data.join("splits.csv")),
        train_mentions: Some(data.join("mentions.train.jsonl")),
        mentions: Some(data.join("mentions.test.jsonl")),
        gold: Some(data.join("gold.train.jsonl")),
        resource: Some(data.join("resource.jsonl")),
        ..Default::default()
    };
    config.scorer.scorer_hidden = 16;
    config.scorer.learning_rate = 0.5;
    config.scorer.epochs = 300;
    config.set_seed(seed);

    let mut steps = pipeline::RANKING_STEPS.to_vec();
    steps.extend([Command::Coverage, Command::TrainScorer, Command::Cluster]);
    steps.push(Command::ScoreCoref {
        gold: data.join("gold.test.jsonl"),
        sys: config.out_dir.join(pipeline::CLUSTERS_FILE),
        format: ClusteringFormat::Jsonl,
    });
    for step in &steps {
        let outcome = pipeline::run(step, &config)?;
        println!("[{step}]");
        for m in outcome.messages {
            println!("  {m}");
        }
    }
    Ok(())
}
