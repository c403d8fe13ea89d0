//! Trains the random-forest re-ranker on a synthetic corpus and compares it
//! with the heuristic score on the test split.
//!
//! cargo run --release --example train_ranker -- [seed] [entries]

use paracoref::evaluation::{average_precision, paired_significance, PairedMetric, RankedItem, RankedList};
use paracoref::features::{build_dataset, FeatureContext, Split};
use paracoref::forest::{self, ForestHyperparams};
use paracoref::graph::CliqueConfig;
use paracoref::supervision::derive_labels;
use paracoref::synth::{synthetic_corpus, CorpusConfig};
use paracoref::Result;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let entries = args.next().and_then(|s| s.parse().ok()).unwrap_or(600);

    let s = synthetic_corpus(&CorpusConfig { entries, seed, ..Default::default() })?;
    let labels = derive_labels(&s.annotations, &s.corpus, &s.judgments, &s.splits)?;
    let ctx = FeatureContext::new(&s.corpus, &s.decisions, 0.26, &CliqueConfig::default())?;
    let data = build_dataset(&ctx, &labels, 3)?;
    let (train, mut test) = (data.split(Split::Train), data.split(Split::Test));
    test.rows.sort_by(|a, b| a.id.cmp(&b.id));
    println!("{} labeled entries: {} train, {} test", data.len(), train.len(), test.len());

    let model = forest::train(&train.matrix(), &train.labels(), &ForestHyperparams { seed, ..Default::default() })?;
    let forest_scores: Vec<f64> = test
        .rows
        .iter()
        .map(|r| model.predict_proba(r.features.as_slice()))
        .collect::<Result<_>>()?;
    let heuristic: Vec<f64> = test.rows.iter().map(|r| r.features.get("score").unwrap()).collect();
    let y = test.labels();

    let ap = |scores: &[f64]| -> Result<f64> {
        let items = test
            .rows
            .iter()
            .zip(scores)
            .map(|(r, &score)| RankedItem { id: r.id.clone(), score, label: r.label })
            .collect();
        average_precision(&RankedList::new(items)?)
    };
    println!("AP forest    {:.4}", ap(&forest_scores)?);
    println!("AP heuristic {:.4}", ap(&heuristic)?);
    let sig = paired_significance(&forest_scores, &heuristic, &y, PairedMetric::AveragePrecision, 10_000, seed)?;
    println!("bootstrap p {:.4}, permutation p {:.4}", sig.bootstrap_p, sig.permutation_p);

    println!("splits per feature:");
    for (name, n) in paracoref::FEATURE_NAMES.iter().zip(model.split_counts()) {
        println!("  {name:<28} {n}");
    }
    Ok(())
}
