//! Classification and ranking metrics, score-threshold baselines and paired
//! significance tests.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, SplitMix64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision and recall are 0 when their denominators are; F1 is 0 when P + R is.
pub fn classification_metrics(gold: &[bool], predicted: &[bool]) -> Result<ClassificationReport> {
    if gold.len() != predicted.len() {
        return Err(Error::InvalidInput(format!(
            "{} gold labels but {} predictions",
            gold.len(),
            predicted.len()
        )));
    }
    if gold.is_empty() {
        return Err(Error::InvalidInput("no predictions to score".into()));
    }
    let (mut tp, mut fp, mut fneg, mut correct) = (0, 0, 0, 0);
    for (&g, &p) in gold.iter().zip(predicted) {
        match (g, p) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fneg += 1,
            (false, false) => {}
        }
        correct += usize::from(g == p);
    }
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fneg);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(ClassificationReport {
        accuracy: ratio(correct, gold.len()),
        precision,
        recall,
        f1,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedItem {
    pub id: String,
    pub score: f64,
    pub label: bool,
}

/// Items sorted by score descending, ties broken by id ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    items: Vec<RankedItem>,
}

impl RankedList {
    pub fn new(mut items: Vec<RankedItem>) -> Result<Self> {
        if let Some(bad) = items.iter().find(|i| !i.score.is_finite()) {
            return Err(Error::InvalidInput(format!("score of {} is not finite", bad.id)));
        }
        items.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.id.cmp(&b.id)));
        Ok(RankedList { items })
    }

    pub fn items(&self) -> &[RankedItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// `(k, precision@k)` for every rank.
    pub fn precision_curve(&self) -> Vec<(usize, f64)> {
        let mut hits = 0;
        self.items
            .iter()
            .enumerate()
            .map(|(i, item)| {
                hits += usize::from(item.label);
                (i + 1, hits as f64 / (i + 1) as f64)
            })
            .collect()
    }

    pub fn precision_curve_csv(&self) -> String {
        let mut out = String::from("k,precision\n");
        for (k, p) in self.precision_curve() {
            out.push_str(&format!("{k},{p}\n"));
        }
        out
    }
}

fn ap_in_rank_order(labels: impl Iterator<Item = bool>) -> Option<f64> {
    let (mut hits, mut sum) = (0usize, 0.0);
    for (i, l) in labels.enumerate() {
        if l {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    (hits > 0).then(|| sum / hits as f64)
}

/// Non-interpolated average precision: mean of precision@k over the ranks
/// of positive items.
pub fn average_precision(list: &RankedList) -> Result<f64> {
    ap_in_rank_order(list.items.iter().map(|i| i.label))
        .ok_or_else(|| Error::InvalidInput("average precision needs a positive item".into()))
}

/// AP of items given by index, ranked by score then index. 0 without positives.
fn ap_indexed(scores: &[f64], labels: &[bool], idx: &[usize]) -> f64 {
    let mut order = idx.to_vec();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    ap_in_rank_order(order.iter().map(|&i| labels[i])).unwrap_or(0.0)
}

/// Accuracy-maximizing threshold for the rule "positive iff score ≥ T".
///
/// Candidates are `lower`, `upper` and the midpoints between adjacent
/// distinct scores; ties go to the smallest candidate.
pub fn tune_accuracy_threshold(scores: &[f64], labels: &[bool], lower: f64, upper: f64) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidInput("non-finite score".into()));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    if pos == 0 || pos == labels.len() {
        return Err(Error::InvalidInput("threshold tuning needs both classes".into()));
    }
    let mut pairs: Vec<(f64, bool)> = scores.iter().copied().zip(labels.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // below_pos[k]: positives among the k smallest scores.
    let n = pairs.len();
    let mut below_pos = vec![0usize; n + 1];
    for k in 0..n {
        below_pos[k + 1] = below_pos[k] + usize::from(pairs[k].1);
    }
    let accuracy_at = |t: f64| {
        let k = pairs.partition_point(|p| p.0 < t);
        let neg_below = k - below_pos[k];
        let pos_above = pos - below_pos[k];
        (neg_below + pos_above) as f64 / n as f64
    };
    let mut candidates = vec![lower, upper];
    for w in pairs.windows(2) {
        if w[0].0 != w[1].0 {
            candidates.push(w[0].0 + (w[1].0 - w[0].0) / 2.0);
        }
    }
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let mut best = (candidates[0], accuracy_at(candidates[0]));
    for &t in &candidates[1..] {
        let acc = accuracy_at(t);
        if acc > best.1 {
            best = (t, acc);
        }
    }
    Ok(best.0)
}

/// Threshold for an unbounded score column, with candidates one unit beyond
/// the observed range at either end.
pub fn tune_score_threshold(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() {
        return tune_accuracy_threshold(scores, labels, 0.0, 0.0);
    }
    tune_accuracy_threshold(scores, labels, lo - 1.0, hi + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignificanceResult {
    pub metric_a: f64,
    pub metric_b: f64,
    /// Share of bootstrap resamples where A does not beat B.
    pub bootstrap_p: f64,
    /// Share of sign-flip permutations at least as extreme as observed.
    pub permutation_p: f64,
    pub n_resamples: usize,
}

pub const MIN_RESAMPLES: usize = 1000;

/// Paired bootstrap and permutation tests over `n_items` aligned items.
///
/// `metric(indices, swapped)` scores both systems on the items at
/// `indices`; where `swapped[k]` is set the two systems' outputs for item
/// `indices[k]` are exchanged. Both p-values use +1 smoothing. Every
/// resample draws from its own seed, so results do not depend on the
/// number of worker threads.
pub fn paired_test<F>(n_items: usize, n_resamples: usize, seed: u64, metric: F) -> Result<SignificanceResult>
where
    F: Fn(&[usize], &[bool]) -> (f64, f64) + Sync,
{
    if n_items == 0 {
        return Err(Error::InvalidInput("no items to compare".into()));
    }
    if n_resamples < MIN_RESAMPLES {
        return Err(Error::InvalidInput(format!(
            "need at least {MIN_RESAMPLES} resamples, got {n_resamples}"
        )));
    }
    let identity: Vec<usize> = (0..n_items).collect();
    let unswapped = vec![false; n_items];
    let (metric_a, metric_b) = metric(&identity, &unswapped);
    let observed = metric_a - metric_b;
    let tolerance = 1e-12 * observed.abs().max(1.0);

    let boot_hits: usize = (0..n_resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = SplitMix64::new(derive_seed(seed, 2 * r as u64));
            let idx: Vec<usize> = (0..n_items).map(|_| rng.below(n_items)).collect();
            let (a, b) = metric(&idx, &unswapped);
            usize::from(a - b <= 0.0)
        })
        .sum();
    let perm_hits: usize = (0..n_resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = SplitMix64::new(derive_seed(seed, 2 * r as u64 + 1));
            let swapped: Vec<bool> = (0..n_items).map(|_| rng.bernoulli(0.5)).collect();
            let (a, b) = metric(&identity, &swapped);
            usize::from((a - b).abs() >= observed.abs() - tolerance)
        })
        .sum();
    let smooth = |hits: usize| (hits + 1) as f64 / (n_resamples + 1) as f64;
    Ok(SignificanceResult {
        metric_a,
        metric_b,
        bootstrap_p: smooth(boot_hits),
        permutation_p: smooth(perm_hits),
        n_resamples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairedMetric {
    /// Average precision of each system's ranking.
    AveragePrecision,
    /// Mean of per-item values (labels ignored), e.g. per-run F1 scores.
    Mean,
}

/// Compare two score columns over the same labeled items. For AP, score
/// ties are broken by item position.
pub fn paired_significance(
    scores_a: &[f64],
    scores_b: &[f64],
    labels: &[bool],
    metric: PairedMetric,
    n_resamples: usize,
    seed: u64,
) -> Result<SignificanceResult> {
    if scores_a.len() != scores_b.len() || scores_a.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "misaligned inputs: {} / {} scores, {} labels",
            scores_a.len(),
            scores_b.len(),
            labels.len()
        )));
    }
    if scores_a.iter().chain(scores_b).any(|s| !s.is_finite()) {
        return Err(Error::InvalidInput("non-finite score".into()));
    }
    // Swapping scores between systems only makes sense on a shared scale.
    let (ra, rb);
    let (scores_a, scores_b) = match metric {
        PairedMetric::AveragePrecision => {
            ra = rank_normalize(scores_a);
            rb = rank_normalize(scores_b);
            (&ra[..], &rb[..])
        }
        PairedMetric::Mean => (scores_a, scores_b),
    };
    paired_test(labels.len(), n_resamples, seed, |idx, swapped| {
        let mut sa = Vec::with_capacity(idx.len());
        let mut sb = Vec::with_capacity(idx.len());
        let mut ls = Vec::with_capacity(idx.len());
        for (k, &i) in idx.iter().enumerate() {
            let (a, b) = if swapped[k] {
                (scores_b[i], scores_a[i])
            } else {
                (scores_a[i], scores_b[i])
            };
            sa.push(a);
            sb.push(b);
            ls.push(labels[i]);
        }
        match metric {
            PairedMetric::AveragePrecision => {
                let positions: Vec<usize> = (0..idx.len()).collect();
                (ap_indexed(&sa, &ls, &positions), ap_indexed(&sb, &ls, &positions))
            }
            PairedMetric::Mean => {
                let n = idx.len() as f64;
                (sa.iter().sum::<f64>() / n, sb.iter().sum::<f64>() / n)
            }
        }
    })
}

/// Mid-rank of each score divided by the item count, in `(0, 1]`. A strictly
/// increasing transform that keeps ties tied, so AP is unchanged.
pub fn rank_normalize(scores: &[f64]) -> Vec<f64> {
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid = (i + j + 2) as f64 / 2.0;
        for &k in &order[i..=j] {
            out[k] = mid / n as f64;
        }
        i = j + 1;
    }
    out
}

/// Indices of items with at least `min_support` support pairs, then a seeded
/// random sample of at most `sample` of them (all of them when `None`),
/// returned in ascending order.
pub fn support_sample(
    support_counts: &[usize],
    min_support: usize,
    sample: Option<usize>,
    seed: u64,
) -> Vec<usize> {
    let mut eligible: Vec<usize> = (0..support_counts.len())
        .filter(|&i| support_counts[i] >= min_support)
        .collect();
    if let Some(k) = sample {
        if k < eligible.len() {
            SplitMix64::new(seed).shuffle(&mut eligible);
            eligible.truncate(k);
            eligible.sort_unstable();
        }
    }
    eligible
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ranked(labels: &[bool]) -> RankedList {
        let n = labels.len();
        RankedList::new(
            labels
                .iter()
                .enumerate()
                .map(|(i, &l)| RankedItem {
                    id: format!("{i:04}"),
                    score: (n - i) as f64,
                    label: l,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn metric_examples() {
        let r = classification_metrics(&[true, true, false, false], &[true, false, true, false]).unwrap();
        assert_eq!((r.accuracy, r.precision, r.recall, r.f1), (0.5, 0.5, 0.5, 0.5));
        let r = classification_metrics(&[true, false], &[true, false]).unwrap();
        assert_eq!((r.accuracy, r.precision, r.recall, r.f1), (1.0, 1.0, 1.0, 1.0));
        let r = classification_metrics(&[true, false], &[false, false]).unwrap();
        assert_eq!((r.precision, r.f1), (0.0, 0.0));
        assert!(classification_metrics(&[true], &[true, false]).is_err());
    }

    #[test]
    fn ap_examples() {
        assert_eq!(average_precision(&ranked(&[true, true, false])).unwrap(), 1.0);
        let ap = average_precision(&ranked(&[true, false, true])).unwrap();
        assert!((ap - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-12);
        assert_eq!(average_precision(&ranked(&[false, true])).unwrap(), 0.5);
        assert!(average_precision(&ranked(&[false, false])).is_err());
    }

    #[test]
    fn ties_break_by_id() {
        let items = vec![
            RankedItem { id: "b".into(), score: 1.0, label: false },
            RankedItem { id: "a".into(), score: 1.0, label: true },
        ];
        let r = RankedList::new(items).unwrap();
        assert_eq!(r.items()[0].id, "a");
        assert_eq!(average_precision(&r).unwrap(), 1.0);
    }

    #[test]
    fn constant_scores_threshold() {
        let t = tune_score_threshold(&[5.0; 4], &[true, true, true, false]).unwrap();
        assert!(t < 5.0);
        let t = tune_score_threshold(&[5.0; 4], &[true, false, false, false]).unwrap();
        assert!(t > 5.0);
        assert!(tune_score_threshold(&[1.0, 2.0], &[false, false]).is_err());
    }

    #[test]
    fn separable_scores_give_midpoint() {
        let t = tune_score_threshold(&[1.0, 2.0, 10.0, 12.0], &[false, false, true, true]).unwrap();
        assert_eq!(t, 6.0);
    }

    #[test]
    fn identical_systems_have_permutation_p_one() {
        let s: Vec<f64> = (0..50).map(|i| (i * 37 % 11) as f64).collect();
        let l: Vec<bool> = (0..50).map(|i| i % 3 == 0).collect();
        let r = paired_significance(&s, &s, &l, PairedMetric::AveragePrecision, 2000, 1).unwrap();
        assert_eq!(r.permutation_p, 1.0);
        assert_eq!(r.bootstrap_p, 1.0);
    }

    #[test]
    fn too_few_resamples_rejected() {
        assert!(paired_significance(&[1.0], &[1.0], &[true], PairedMetric::Mean, 10, 0).is_err());
    }

    #[test]
    fn support_sample_filters_and_caps() {
        let counts = [1, 6, 7, 8, 2, 9];
        assert_eq!(support_sample(&counts, 6, None, 0), vec![1, 2, 3, 5]);
        let s = support_sample(&counts, 6, Some(2), 9);
        assert_eq!(s.len(), 2);
        assert_eq!(s, support_sample(&counts, 6, Some(2), 9));
    }
}
