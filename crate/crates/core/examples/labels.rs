//! Distant supervision from event-cluster annotations.
//!
//! cargo run --example labels

use std::collections::BTreeSet;

use paracoref::corpus::Span;
use paracoref::supervision::{
    negative_lemma_pairs, positive_lemma_pairs, AnnotatedCluster, AnnotatedMention,
    EventClusterAnnotation,
};

fn topic(name: &str, clusters: &[&[&str]]) -> EventClusterAnnotation {
    let mut pos = 0;
    EventClusterAnnotation {
        topic: name.into(),
        clusters: clusters
            .iter()
            .enumerate()
            .map(|(c, lemmas)| AnnotatedCluster {
                id: format!("{name}-{c}"),
                mentions: lemmas
                    .iter()
                    .map(|l| {
                        pos += 1;
                        AnnotatedMention {
                            doc: format!("{name}.xml"),
                            lemma: l.to_string(),
                            span: Span::new(pos, pos + 1),
                            verbal: true,
                        }
                    })
                    .collect(),
            })
            .collect(),
    }
}

fn show(title: &str, pairs: &BTreeSet<(String, String)>) {
    println!("{title} ({}):", pairs.len());
    for (a, b) in pairs {
        println!("  ({a}, {b})");
    }
}

fn main() {
    let speech = [topic("speech", &[&["talk", "say", "tell", "accord to", "statement", "confirm"]])];
    show("positives", &positive_lemma_pairs(&speech));

    let leak = [topic("leak", &[&["specify", "reveal", "say"], &["get"]])];
    show("negatives", &negative_lemma_pairs(&leak));
    show("positives from the same topic", &positive_lemma_pairs(&leak));
}
