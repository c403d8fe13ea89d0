mod oracles;

use std::collections::BTreeSet;

use paracoref::coref_metrics::{self, ceaf_e_alignment, diff_errors, Clustering};
use paracoref::entity_coverage::{nec, tune_threshold_scores};
use paracoref::evaluation::{average_precision, paired_significance, PairedMetric, RankedItem, RankedList};
use paracoref::forest::{self, ForestHyperparams, Node};
use paracoref::graph::GlobalGraph;
use proptest::prelude::*;

fn set() -> impl Strategy<Value = BTreeSet<String>> {
    prop::collection::btree_set("[a-e]", 0..5)
}

fn clustering(labels: &[u8], prefix: &str) -> Clustering {
    Clustering::from_assignments(labels.iter().enumerate().map(|(i, c)| (format!("m{i:02}"), format!("{prefix}{c}")))).unwrap()
}

fn ranked(scores: &[f64], labels: &[bool]) -> RankedList {
    RankedList::new(
        scores
            .iter()
            .zip(labels)
            .enumerate()
            .map(|(i, (&s, &l))| RankedItem { id: format!("i{i:03}"), score: s, label: l })
            .collect(),
    )
    .unwrap()
}

proptest! {
    #[test]
    fn nec_is_symmetric_and_bounded(a in set(), b in set()) {
        let v = nec(&a, &b);
        prop_assert_eq!(v, nec(&b, &a));
        prop_assert!((0.0..=1.0).contains(&v));
        if !a.is_empty() {
            prop_assert_eq!(nec(&a, &a), 1.0);
        }
    }

    #[test]
    fn tuned_threshold_matches_exhaustive_cut(
        rows in prop::collection::vec((0u8..=10, any::<bool>()), 2..60)
    ) {
        let scores: Vec<f64> = rows.iter().map(|r| f64::from(r.0) / 10.0).collect();
        let mut labels: Vec<bool> = rows.iter().map(|r| r.1).collect();
        labels[0] = true;
        labels[1] = false;
        let got = tune_threshold_scores(&scores, &labels).unwrap();
        let want = oracles::best_cut(&scores, &labels, 0.0, 1.0);
        prop_assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        prop_assert_eq!(oracles::accuracy_at(&scores, &labels, got), oracles::accuracy_at(&scores, &labels, want));
    }

    #[test]
    fn maximal_cliques_match_subset_enumeration(
        n in 1usize..9,
        bits in prop::collection::vec(any::<bool>(), 36)
    ) {
        let mut adj = vec![vec![false; n]; n];
        let mut g = GlobalGraph::new();
        for i in 0..n {
            g.node_id(&i.to_string());
        }
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                if bits[k] {
                    adj[i][j] = true;
                    adj[j][i] = true;
                    g.add_edge(&i.to_string(), &j.to_string());
                }
                k += 1;
            }
        }
        let got: BTreeSet<Vec<usize>> = g
            .maximal_cliques()
            .into_iter()
            .filter(|c| c.len() > 1)
            .map(|c| {
                let mut v: Vec<usize> = c.iter().map(|&i| g.name(i).parse().unwrap()).collect();
                v.sort_unstable();
                v
            })
            .collect();
        let want: BTreeSet<Vec<usize>> = oracles::maximal_cliques(n, &adj).into_iter().filter(|c| c.len() > 1).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn ceaf_assignment_is_optimal(
        g in prop::collection::vec(0u8..5, 1..9),
        s in prop::collection::vec(0u8..5, 9)
    ) {
        let gold = clustering(&g, "g");
        let sys = clustering(&s[..g.len()], "s");
        let (total, _, _) = ceaf_e_alignment(&gold, &sys).unwrap();
        prop_assert!((total - oracles::ceaf_e_total(&gold, &sys)).abs() < 1e-9);
        let r = coref_metrics::score(&gold, &sys).unwrap();
        for m in [r.muc, r.b_cubed, r.ceaf_e] {
            prop_assert!((0.0..=1.0).contains(&m.f1));
        }
    }

    #[test]
    fn error_diff_matches_pairwise_enumeration(
        labels in prop::collection::vec((0u8..4, 0u8..4, 0u8..4), 1..10)
    ) {
        let gold = clustering(&labels.iter().map(|l| l.0).collect::<Vec<_>>(), "g");
        let base = clustering(&labels.iter().map(|l| l.1).collect::<Vec<_>>(), "b");
        let new = clustering(&labels.iter().map(|l| l.2).collect::<Vec<_>>(), "n");
        let d = diff_errors(&gold, &base, &new).unwrap();
        let (fp, fnr) = oracles::diff_pairs(&gold, &base, &new);
        prop_assert_eq!(d.fp_recovered, fp);
        prop_assert_eq!(d.fn_recovered, fnr);
    }

    #[test]
    fn ap_with_positives_last_has_closed_form(n in 1usize..60, p in 1usize..60) {
        let p = p.min(n);
        let scores: Vec<f64> = (0..n).map(|i| (n - i) as f64).collect();
        let labels: Vec<bool> = (0..n).map(|i| i >= n - p).collect();
        let ap = average_precision(&ranked(&scores, &labels)).unwrap();
        prop_assert!((ap - oracles::ap_positives_last(n, p)).abs() < 1e-12);
    }

    #[test]
    fn ap_is_invariant_under_monotone_transforms(
        rows in prop::collection::vec((0.0f64..1.0, any::<bool>()), 1..50)
    ) {
        let scores: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let labels: Vec<bool> = rows.iter().map(|r| r.1).collect();
        prop_assume!(labels.iter().any(|&l| l));
        let a = average_precision(&ranked(&scores, &labels)).unwrap();
        let warped: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() - 7.0).collect();
        let b = average_precision(&ranked(&warped, &labels)).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn p_values_lie_in_unit_interval(
        rows in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0, any::<bool>()), 2..30),
        seed in any::<u64>()
    ) {
        let a: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let b: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let y: Vec<bool> = rows.iter().map(|r| r.2).collect();
        for metric in [PairedMetric::AveragePrecision, PairedMetric::Mean] {
            let r = paired_significance(&a, &b, &y, metric, 1000, seed).unwrap();
            for p in [r.bootstrap_p, r.permutation_p] {
                prop_assert!(p > 0.0 && p <= 1.0, "{p}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn trees_respect_hyperparameters(
        rows in prop::collection::vec((prop::collection::vec(0u8..6, 3), any::<bool>()), 4..80),
        depth in 0usize..6,
        leaf in 1usize..4,
        split in 2usize..10,
        seed in any::<u64>()
    ) {
        let x: Vec<Vec<f64>> = rows.iter().map(|r| r.0.iter().map(|&v| f64::from(v)).collect()).collect();
        let y: Vec<bool> = rows.iter().map(|r| r.1).collect();
        prop_assume!(y.iter().any(|&v| v) && y.iter().any(|&v| !v));
        let hp = ForestHyperparams {
            n_estimators: 3,
            max_depth: depth,
            min_samples_leaf: leaf,
            min_samples_split: split,
            features_per_split: 2,
            seed,
        };
        let f = forest::train(&x, &y, &hp).unwrap();
        for t in &f.trees {
            prop_assert!(t.depth() <= depth);
            let mut total = 0;
            for node in &t.nodes {
                if let Node::Leaf(p, n) = *node {
                    prop_assert!(n >= leaf);
                    prop_assert!((0.0..=1.0).contains(&p));
                    total += n;
                }
            }
            prop_assert_eq!(total, x.len());
        }
        for r in &x {
            let p = f.predict_proba(r).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }
}
