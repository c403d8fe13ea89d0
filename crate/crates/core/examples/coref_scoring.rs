//! Coreference metrics, resource coverage and an error diff on toy data.
//!
//! cargo run --example coref_scoring

use std::collections::BTreeSet;

use paracoref::coref_metrics::{coverage, diff_errors, score, Clustering};
use paracoref::corpus::{lemma_pair, Span};
use paracoref::supervision::{AnnotatedCluster, AnnotatedMention, EventClusterAnnotation};
use paracoref::Result;

fn clusters(groups: &[&[&str]]) -> Result<Clustering> {
    Clustering::from_clusters(&groups.iter().map(|g| g.to_vec()).collect::<Vec<_>>())
}

fn main() -> Result<()> {
    let gold = clusters(&[&["a", "b", "c"], &["d", "e"], &["f"]])?;
    let baseline = clusters(&[&["a", "b"], &["c", "d", "e", "f"]])?;
    let augmented = clusters(&[&["a", "b", "c"], &["d", "e", "f"]])?;

    for (name, sys) in [("baseline", &baseline), ("augmented", &augmented)] {
        let r = score(&gold, sys)?;
        println!(
            "{name:<10} MUC {:.3}  B3 {:.3}  CEAF-e {:.3}  CoNLL {:.3}",
            r.muc.f1, r.b_cubed.f1, r.ceaf_e.f1, r.conll_f1
        );
    }
    print!("{}", diff_errors(&gold, &baseline, &augmented)?.to_csv());

    let mention = |lemma: &str, k: usize, verbal: bool| AnnotatedMention {
        doc: "d1".into(),
        lemma: lemma.into(),
        span: Span::new(k, k + 1),
        verbal,
    };
    let annotations = vec![EventClusterAnnotation {
        topic: "t1".into(),
        clusters: vec![AnnotatedCluster {
            id: "c1".into(),
            mentions: vec![mention("kill", 0, true), mention("shoot", 1, true), mention("attack", 2, false)],
        }],
    }];
    let resource: BTreeSet<_> = [lemma_pair("kill", "shoot"), lemma_pair("attack", "shoot")].into_iter().collect();
    let all = coverage(&annotations, &resource, false);
    let verbal = coverage(&annotations, &resource, true);
    println!("coverage all {}/{} ({:.1}%)", all.covered, all.total, all.percent);
    println!("coverage verbal {}/{} ({:.1}%)", verbal.covered, verbal.total, verbal.percent);
    Ok(())
}
