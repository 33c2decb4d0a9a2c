//! Within-replication inter-rater reliability (iota), plus Cohen's kappa on a
//! contingency table as an independent cross-check.
//!
//! Iota is `1 - d_o / d_e`:
//!
//! * `d_o` averages the disagreement of all unordered within-item annotation
//!   pairs. Each item is normalized by its own pair count and weighted by its
//!   annotation count, so every annotation carries equal weight when items
//!   have different numbers of annotations.
//! * `d_e` averages the disagreement of all annotation pairs coming from two
//!   *different* rater slots, across all items (the same item included).
//!
//! Items with fewer than two annotations contribute to neither term. With a
//! constant number of raters per item this is the textbook generalized kappa,
//! and with two raters on a categorical scale it equals Cohen's kappa.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{AnnotationValue, ItemStats, ItemSummary, LabelItemStats, Scale};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum MetricKind {
    #[serde(rename = "irr")]
    Irr,
    #[serde(rename = "xrr")]
    Xrr,
    #[serde(rename = "normalized_xrr")]
    NormalizedXrr,
    #[serde(rename = "disattenuated_rho")]
    DisattenuatedRho,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Disagreement {
    pub observed: f64,
    pub expected: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub replicates: usize,
    pub seed: u64,
    /// Replicates dropped because the metric was undefined on them.
    pub discarded: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EstimateWarning {
    /// A disattenuated value exceeded 1.
    #[serde(rename = "above_one")]
    AboveOne,
}

/// A point estimate with the bookkeeping needed to audit it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReliabilityEstimate {
    pub value: f64,
    pub kind: MetricKind,
    pub n_items: usize,
    /// Annotation counts, one entry per replication involved.
    pub n_annotations: Vec<usize>,
    /// Present for kappa-family kinds; `value == 1 - observed / expected`.
    pub disagreement: Option<Disagreement>,
    pub ci: Option<ConfidenceInterval>,
    pub warnings: Vec<EstimateWarning>,
}

impl ReliabilityEstimate {
    pub(crate) fn from_disagreement(
        kind: MetricKind,
        observed: f64,
        expected: f64,
        n_items: usize,
        n_annotations: Vec<usize>,
    ) -> Result<Self> {
        if !(expected > 0.0) {
            return Err(Error::DegenerateData(
                "expected disagreement is zero (no variation in the annotations)".into(),
            ));
        }
        Ok(Self {
            value: 1.0 - observed / expected,
            kind,
            n_items,
            n_annotations,
            disagreement: Some(Disagreement { observed, expected }),
            ci: None,
            warnings: Vec::new(),
        })
    }

    pub fn observed(&self) -> Option<f64> {
        self.disagreement.map(|d| d.observed)
    }

    pub fn expected(&self) -> Option<f64> {
        self.disagreement.map(|d| d.expected)
    }
}

/// Generalized kappa (iota) for one label within one replication.
pub fn iota(stats: &LabelItemStats) -> Result<ReliabilityEstimate> {
    iota_items(stats.items.iter(), stats.scale, stats.n_categories(), stats.n_slots)
}

#[derive(Clone, Default)]
struct SlotTotals {
    n: u64,
    counts: Vec<u64>,
    sum: f64,
    sum_sq: f64,
}

/// Iota over an arbitrary sequence of items; used directly by the bootstrap.
pub(crate) fn iota_items<'a>(
    items: impl IntoIterator<Item = &'a ItemStats>,
    scale: Scale,
    n_categories: usize,
    n_slots: usize,
) -> Result<ReliabilityEstimate> {
    let mut slots: Vec<SlotTotals> = vec![SlotTotals::default(); n_slots];
    let mut weighted_observed = 0.0;
    let mut total = 0u64;
    let mut n_items = 0usize;

    for item in items {
        let m = item.count as u64;
        if m < 2 {
            continue;
        }
        n_items += 1;
        total += m;
        let pairs = (m * (m - 1) / 2) as f64;
        let within = match &item.summary {
            ItemSummary::Categorical(counts) => {
                let agreeing: u64 = counts.iter().map(|&c| c as u64 * (c as u64).saturating_sub(1) / 2).sum();
                (pairs - agreeing as f64) / pairs
            }
            ItemSummary::Interval { sum, sum_sq } => {
                let spread = (m as f64 * sum_sq - sum * sum).max(0.0);
                spread / pairs
            }
        };
        weighted_observed += m as f64 * within;

        for a in &item.annotations {
            let acc = &mut slots[a.slot.index()];
            acc.n += 1;
            match a.value {
                AnnotationValue::Categorical(c) => {
                    if acc.counts.is_empty() {
                        acc.counts = vec![0; n_categories];
                    }
                    acc.counts[c as usize] += 1;
                }
                AnnotationValue::Interval(v) => {
                    acc.sum += v;
                    acc.sum_sq += v * v;
                }
            }
        }
    }
    if n_items == 0 {
        return Err(Error::NoPairableItems);
    }
    let observed = weighted_observed / total as f64;

    // Pairs of annotations from distinct slots: (N^2 - sum n_r^2) / 2.
    let n_total = total as u128;
    let sum_sq_n: u128 = slots.iter().map(|s| (s.n as u128) * (s.n as u128)).sum();
    let cross_pairs = (n_total * n_total - sum_sq_n) / 2;
    if cross_pairs == 0 {
        return Err(Error::NoPairableItems);
    }
    let expected = match scale {
        Scale::Categorical => {
            let mut agreeing: u128 = 0;
            for k in 0..n_categories {
                let pooled: u128 = slots.iter().map(|s| s.counts.get(k).copied().unwrap_or(0) as u128).sum();
                let own: u128 = slots
                    .iter()
                    .map(|s| {
                        let c = s.counts.get(k).copied().unwrap_or(0) as u128;
                        c * c
                    })
                    .sum();
                agreeing += (pooled * pooled - own) / 2;
            }
            (cross_pairs - agreeing) as f64 / cross_pairs as f64
        }
        Scale::Interval => {
            let pooled_sum: f64 = slots.iter().map(|s| s.sum).sum();
            let own_sum_sq: f64 = slots.iter().map(|s| s.sum * s.sum).sum();
            let spread: f64 = slots
                .iter()
                .map(|s| s.sum_sq * (total - s.n) as f64)
                .sum::<f64>()
                - (pooled_sum * pooled_sum - own_sum_sq);
            spread.max(0.0) / cross_pairs as f64
        }
    };
    ReliabilityEstimate::from_disagreement(MetricKind::Irr, observed, expected, n_items, vec![total as usize])
}

/// Cohen's kappa from a square contingency table (rows: rater 1, columns: rater 2).
pub fn cohen_kappa_2x2(contingency: &[Vec<u64>]) -> Result<ReliabilityEstimate> {
    let k = contingency.len();
    if k == 0 || contingency.iter().any(|row| row.len() != k) {
        return Err(Error::DegenerateData("contingency table must be square and non-empty".into()));
    }
    let total: u64 = contingency.iter().flatten().sum();
    if total == 0 {
        return Err(Error::DegenerateData("contingency table is empty".into()));
    }
    let t = total as f64;
    let diagonal: u64 = (0..k).map(|i| contingency[i][i]).sum();
    let p_o = diagonal as f64 / t;
    let p_e: f64 = (0..k)
        .map(|i| {
            let row: u64 = contingency[i].iter().sum();
            let col: u64 = contingency.iter().map(|r| r[i]).sum();
            (row as f64 / t) * (col as f64 / t)
        })
        .sum();
    if p_e >= 1.0 {
        return Err(Error::DegenerateData("chance agreement is 1".into()));
    }
    Ok(ReliabilityEstimate {
        value: (p_o - p_e) / (1.0 - p_e),
        kind: MetricKind::Irr,
        n_items: total as usize,
        n_annotations: vec![2 * total as usize],
        disagreement: Some(Disagreement {
            observed: 1.0 - p_o,
            expected: 1.0 - p_e,
        }),
        ci: None,
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::disagreement;
    use crate::model::{build_table, item_stats, RawRecord, RawValue};
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn categorical(items: &[&[Option<u32>]]) -> LabelItemStats {
        interval_or_cat(items.iter().map(|row| row.iter().map(|v| v.map(|c| RawValue::Category(c.to_string()))).collect()).collect(), Scale::Categorical)
    }

    fn interval_or_cat(items: Vec<Vec<Option<RawValue>>>, scale: Scale) -> LabelItemStats {
        let mut records = Vec::new();
        for (i, row) in items.into_iter().enumerate() {
            for (s, v) in row.into_iter().enumerate() {
                if let Some(v) = v {
                    records.push(RawRecord::new("X", format!("i{i:03}"), format!("s{s}"), "l", v));
                }
            }
        }
        let table = build_table(records, BTreeMap::from([("l".to_string(), scale)])).unwrap();
        item_stats(&table, "l", "X").unwrap()
    }

    /// Literal pair enumeration: within-item pairs weighted per annotation,
    /// cross-slot pairs over all items.
    fn iota_naive(stats: &LabelItemStats) -> (f64, f64) {
        let pairable: Vec<_> = stats.items.iter().filter(|i| i.count >= 2).collect();
        let total: f64 = pairable.iter().map(|i| i.count as f64).sum();
        let mut observed = 0.0;
        for item in &pairable {
            let (mut sum, mut n) = (0.0, 0.0);
            for a in 0..item.annotations.len() {
                for b in (a + 1)..item.annotations.len() {
                    sum += disagreement(item.annotations[a].value, item.annotations[b].value, stats.scale).unwrap();
                    n += 1.0;
                }
            }
            observed += item.count as f64 / total * sum / n;
        }
        let all: Vec<_> = pairable.iter().flat_map(|i| i.annotations.iter()).collect();
        let (mut sum, mut n) = (0.0, 0.0);
        for u in &all {
            for v in &all {
                if u.slot < v.slot {
                    sum += disagreement(u.value, v.value, stats.scale).unwrap();
                    n += 1.0;
                }
            }
        }
        (observed, sum / n)
    }

    #[test]
    fn hand_enumerated_two_by_two() {
        // item1 = (A, A), item2 = (A, B)
        let stats = categorical(&[&[Some(0), Some(0)], &[Some(0), Some(1)]]);
        let est = iota(&stats).unwrap();
        assert!((est.observed().unwrap() - 0.5).abs() < 1e-15);
        assert!((est.expected().unwrap() - 0.5).abs() < 1e-15);
        assert!(est.value.abs() < 1e-15);
        let kappa = cohen_kappa_2x2(&[vec![1, 1], vec![0, 0]]).unwrap();
        assert!((kappa.value - est.value).abs() < 1e-12);
    }

    #[test]
    fn perfect_agreement_is_one() {
        let stats = categorical(&[&[Some(0), Some(0)], &[Some(1), Some(1)]]);
        let est = iota(&stats).unwrap();
        assert_eq!(est.observed(), Some(0.0));
        assert_eq!(est.value, 1.0);
    }

    #[test]
    fn constant_annotations_are_degenerate() {
        let stats = categorical(&[&[Some(1), Some(1)], &[Some(1), Some(1)]]);
        assert!(matches!(iota(&stats), Err(Error::DegenerateData(_))));
    }

    #[test]
    fn single_annotation_items_are_not_pairable() {
        let stats = categorical(&[&[Some(1), None], &[None, Some(0)]]);
        assert!(matches!(iota(&stats), Err(Error::NoPairableItems)));
    }

    #[test]
    fn singletons_do_not_enter_expected_disagreement() {
        let with = categorical(&[&[Some(0), Some(0)], &[Some(0), Some(1)], &[Some(1), None]]);
        let without = categorical(&[&[Some(0), Some(0)], &[Some(0), Some(1)]]);
        assert_eq!(iota(&with).unwrap().value, iota(&without).unwrap().value);
    }

    #[test]
    fn cohen_examples() {
        assert_eq!(cohen_kappa_2x2(&[vec![5, 0], vec![0, 5]]).unwrap().value, 1.0);
        assert!(cohen_kappa_2x2(&[vec![1, 1], vec![0, 0]]).unwrap().value.abs() < 1e-15);
        assert!(cohen_kappa_2x2(&[vec![2, 2], vec![2, 2]]).unwrap().value.abs() < 1e-15);
        assert!(matches!(
            cohen_kappa_2x2(&[vec![3, 0], vec![0, 0]]),
            Err(Error::DegenerateData(_))
        ));
    }

    fn ragged_items() -> impl Strategy<Value = Vec<Vec<Option<u32>>>> {
        (1usize..=5, 2u32..=4).prop_flat_map(|(b, k)| {
            prop::collection::vec(prop::collection::vec(prop::option::weighted(0.8, 0..k), b), 1..=50)
        })
    }

    proptest! {
        #[test]
        fn fast_path_matches_enumeration(rows in ragged_items()) {
            prop_assume!(rows.iter().flatten().any(Option::is_some));
            let refs: Vec<&[Option<u32>]> = rows.iter().map(|r| r.as_slice()).collect();
            let stats = categorical(&refs);
            if let Ok(est) = iota(&stats) {
                let (o, e) = iota_naive(&stats);
                prop_assert!((est.observed().unwrap() - o).abs() <= 1e-12);
                prop_assert!((est.expected().unwrap() - e).abs() <= 1e-12);
                prop_assert!(est.value <= 1.0 + 1e-12);
            }
        }

        #[test]
        fn interval_fast_path_matches_enumeration(
            rows in prop::collection::vec(prop::collection::vec(prop::option::weighted(0.8, -3.0f64..3.0), 3), 2..=40)
        ) {
            prop_assume!(rows.iter().flatten().any(Option::is_some));
            let stats = interval_or_cat(
                rows.iter().map(|r| r.iter().map(|v| v.map(RawValue::Score)).collect()).collect(),
                Scale::Interval,
            );
            if let Ok(est) = iota(&stats) {
                let (o, e) = iota_naive(&stats);
                prop_assert!((est.observed().unwrap() - o).abs() <= 1e-12);
                prop_assert!((est.expected().unwrap() - e).abs() <= 1e-12);
            }
        }
    }
}
