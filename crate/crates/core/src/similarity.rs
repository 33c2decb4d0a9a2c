//! Replication similarity: normalized cross-kappa and the correlation-based
//! route (item mean scores, Pearson correlation, split-half reliability and
//! Spearman's correction for attenuation).

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::irr::{EstimateWarning, MetricKind, ReliabilityEstimate};
use crate::model::{AnnotationValue, ItemId, LabelItemStats, PairedLabelView, Scale};

/// Split count used when none is given.
pub const DEFAULT_SPLITS: usize = 20;

/// Cross-kappa divided by the geometric mean of the two replications' IRRs.
///
/// Not clamped: values above 1 carry [`EstimateWarning::AboveOne`].
pub fn normalized_kappa_x(
    kx: &ReliabilityEstimate,
    irr_x: &ReliabilityEstimate,
    irr_y: &ReliabilityEstimate,
) -> Result<ReliabilityEstimate> {
    let value = normalize(kx.value, irr_x.value, irr_y.value)?;
    Ok(ReliabilityEstimate {
        value,
        kind: MetricKind::NormalizedXrr,
        n_items: kx.n_items,
        n_annotations: kx.n_annotations.clone(),
        disagreement: None,
        ci: None,
        warnings: above_one(value),
    })
}

pub(crate) fn normalize(kx: f64, irr_x: f64, irr_y: f64) -> Result<f64> {
    for r in [irr_x, irr_y] {
        if !(r > 0.0) {
            return Err(Error::NonPositiveReliability(r));
        }
    }
    Ok(kx / (irr_x.sqrt() * irr_y.sqrt()))
}

fn above_one(value: f64) -> Vec<EstimateWarning> {
    if value > 1.0 {
        vec![EstimateWarning::AboveOne]
    } else {
        Vec::new()
    }
}

/// Numeric encoding of each category, or `None` for interval labels.
///
/// Binary labels whose tokens are numbers ("0"/"1") use those numbers; other
/// binary labels use the category index.
fn category_scores(stats: &LabelItemStats) -> Result<Option<Vec<f64>>> {
    if stats.scale == Scale::Interval {
        return Ok(None);
    }
    if stats.categories.len() > 2 {
        return Err(Error::MultiCategoryMean {
            label: stats.label.clone(),
            categories: stats.categories.len(),
        });
    }
    let parsed: Option<Vec<f64>> = stats.categories.iter().map(|c| c.trim().parse().ok()).collect();
    Ok(Some(parsed.unwrap_or_else(|| (0..stats.categories.len()).map(|i| i as f64).collect())))
}

fn score(value: AnnotationValue, scores: &Option<Vec<f64>>) -> f64 {
    match (value, scores) {
        (AnnotationValue::Interval(v), _) => v,
        (AnnotationValue::Categorical(c), Some(s)) => s[c as usize],
        (AnnotationValue::Categorical(c), None) => c as f64,
    }
}

/// Mean annotation score per item (positive rate for binary labels).
pub fn item_means(stats: &LabelItemStats) -> Result<BTreeMap<ItemId, f64>> {
    let scores = category_scores(stats)?;
    Ok(stats
        .items
        .iter()
        .filter(|i| i.count > 0)
        .map(|i| {
            let total: f64 = i.annotations.iter().map(|a| score(a.value, &scores)).sum();
            (i.item, total / i.count as f64)
        })
        .collect())
}

/// Pearson product-moment correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 3 {
        return Err(Error::TooFewPoints(xs.len()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ConstantSequence);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Split-half reliability of item mean scores, stepped up with
/// Spearman-Brown and averaged over `splits` seeded random partitions.
///
/// Items with fewer than two annotations are skipped. A partition whose half
/// means are constant (or perfectly anti-correlated) is discarded.
pub fn split_half_reliability(stats: &LabelItemStats, splits: usize, seed: u64) -> Result<f64> {
    if splits == 0 {
        return Err(Error::InvalidConfig("splits must be at least 1".into()));
    }
    let scores = category_scores(stats)?;
    let items: Vec<Vec<f64>> = stats
        .items
        .iter()
        .filter(|i| i.count >= 2)
        .map(|i| i.annotations.iter().map(|a| score(a.value, &scores)).collect())
        .collect();
    if items.is_empty() {
        return Err(Error::NoPairableItems);
    }

    let mut first = vec![0.0; items.len()];
    let mut second = vec![0.0; items.len()];
    let mut buffer = Vec::new();
    let mut total = 0.0;
    let mut used = 0usize;
    for split in 0..splits {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(split as u64);
        for (k, values) in items.iter().enumerate() {
            buffer.clear();
            buffer.extend_from_slice(values);
            buffer.shuffle(&mut rng);
            let half = buffer.len() / 2;
            first[k] = buffer[..half].iter().sum::<f64>() / half as f64;
            second[k] = buffer[half..].iter().sum::<f64>() / (buffer.len() - half) as f64;
        }
        match pearson(&first, &second) {
            Ok(r) if r > -1.0 => {
                total += 2.0 * r / (1.0 + r);
                used += 1;
            }
            Ok(_) | Err(Error::ConstantSequence) => {}
            Err(e) => return Err(e),
        }
    }
    if used == 0 {
        return Err(Error::DegenerateSplit);
    }
    Ok(total / used as f64)
}

/// Inputs to Spearman's correction for attenuation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DisattenuationInputs {
    pub r_xy: f64,
    pub reliability_x: f64,
    pub reliability_y: f64,
}

/// Observed correlation divided by the geometric mean of the reliabilities.
pub fn disattenuated_rho(inputs: DisattenuationInputs) -> Result<f64> {
    normalize(inputs.r_xy, inputs.reliability_x, inputs.reliability_y)
}

/// Disattenuated correlation between the two sides' item mean scores, using
/// split-half reliabilities of each side.
pub fn rho_xy(view: &PairedLabelView, splits: usize, seed: u64) -> Result<ReliabilityEstimate> {
    let x = view.x_stats();
    let y = view.y_stats();
    let mx = item_means(&x)?;
    let my = item_means(&y)?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = mx
        .iter()
        .filter_map(|(item, a)| my.get(item).map(|b| (*a, *b)))
        .unzip();
    let inputs = DisattenuationInputs {
        r_xy: pearson(&xs, &ys)?,
        reliability_x: split_half_reliability(&x, splits, seed)?,
        reliability_y: split_half_reliability(&y, splits, seed)?,
    };
    let value = disattenuated_rho(inputs)?;
    Ok(ReliabilityEstimate {
        value,
        kind: MetricKind::DisattenuatedRho,
        n_items: xs.len(),
        n_annotations: vec![view.total_x(), view.total_y()],
        disagreement: None,
        ci: None,
        warnings: above_one(value),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::irr::Disagreement;
    use crate::model::{build_table, item_stats, RawRecord, RawValue};

    fn estimate(value: f64) -> ReliabilityEstimate {
        ReliabilityEstimate {
            value,
            kind: MetricKind::Irr,
            n_items: 1,
            n_annotations: vec![2],
            disagreement: Some(Disagreement { observed: 0.0, expected: 1.0 }),
            ci: None,
            warnings: Vec::new(),
        }
    }

    fn stats(rows: &[&[&str]], scale: Scale) -> LabelItemStats {
        let mut records = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            for (s, v) in row.iter().enumerate() {
                let value = match scale {
                    Scale::Categorical => RawValue::Category(v.to_string()),
                    Scale::Interval => RawValue::Score(v.parse().unwrap()),
                };
                records.push(RawRecord::new("X", format!("i{i:03}"), format!("s{s}"), "l", value));
            }
        }
        let table = build_table(records, BTreeMap::from([("l".to_string(), scale)])).unwrap();
        item_stats(&table, "l", "X").unwrap()
    }

    #[test]
    fn normalized_awe_example() {
        let n = normalized_kappa_x(&estimate(0.0817), &estimate(0.1208), &estimate(0.117)).unwrap();
        assert!((n.value - 0.6872).abs() < 5e-5, "{}", n.value);
        assert_eq!(n.kind, MetricKind::NormalizedXrr);
    }

    #[test]
    fn normalized_perfect_replication() {
        for v in [0.05, 0.3, 0.9] {
            let n = normalized_kappa_x(&estimate(v), &estimate(v), &estimate(v)).unwrap();
            assert!((n.value - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn normalized_rejects_non_positive_irr() {
        assert!(matches!(
            normalized_kappa_x(&estimate(0.2), &estimate(0.0), &estimate(0.5)),
            Err(Error::NonPositiveReliability(_))
        ));
    }

    #[test]
    fn normalized_flags_above_one() {
        let n = normalized_kappa_x(&estimate(0.5), &estimate(0.2), &estimate(0.3)).unwrap();
        assert!(n.value > 1.0);
        assert_eq!(n.warnings, [EstimateWarning::AboveOne]);
    }

    #[test]
    fn means() {
        let s = stats(&[&["1", "0"]], Scale::Categorical);
        assert_eq!(item_means(&s).unwrap().into_values().collect::<Vec<_>>(), [0.5]);
        let s = stats(&[&["0.2", "0.4"]], Scale::Interval);
        let m = item_means(&s).unwrap().into_values().next().unwrap();
        assert!((m - 0.3).abs() < 1e-15);
        let s = stats(&[&["a", "b", "c"]], Scale::Categorical);
        assert!(matches!(item_means(&s), Err(Error::MultiCategoryMean { categories: 3, .. })));
    }

    #[test]
    fn pearson_examples() {
        let xs = [1.0, 2.0, 3.0, 5.0];
        assert!((pearson(&xs, &xs).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = xs.iter().map(|v| -v).collect();
        assert!((pearson(&xs, &neg).unwrap() + 1.0).abs() < 1e-15);
        // r = 3 / sqrt(2 * 42 / 9) = 0.98198...
        let r = pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap();
        assert!((r - 0.9820).abs() < 5e-5, "{r}");
        assert!(matches!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(Error::ConstantSequence)));
        assert!(matches!(pearson(&[1.0, 2.0], &[1.0, 2.0, 3.0]), Err(Error::LengthMismatch(2, 3))));
        assert!(matches!(pearson(&[1.0, 2.0], &[1.0, 2.0]), Err(Error::TooFewPoints(2))));
    }

    #[test]
    fn split_half_unanimous_items_is_one() {
        let s = stats(
            &[&["0.1", "0.1"], &["0.5", "0.5", "0.5"], &["0.9", "0.9"], &["0.3", "0.3", "0.3", "0.3"]],
            Scale::Interval,
        );
        let r = split_half_reliability(&s, 10, 7).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn split_half_is_deterministic() {
        let rows: Vec<Vec<String>> = (0..40)
            .map(|i| (0..4).map(|j| (((i * 7 + j * 3) % 5) as f64 / 4.0).to_string()).collect())
            .collect();
        let refs: Vec<Vec<&str>> = rows.iter().map(|r| r.iter().map(String::as_str).collect()).collect();
        let refs: Vec<&[&str]> = refs.iter().map(|r| r.as_slice()).collect();
        let s = stats(&refs, Scale::Interval);
        assert_eq!(
            split_half_reliability(&s, 20, 99).unwrap(),
            split_half_reliability(&s, 20, 99).unwrap()
        );
    }

    #[test]
    fn split_half_rejects_unpairable() {
        let s = stats(&[&["1"], &["0"]], Scale::Categorical);
        assert!(matches!(split_half_reliability(&s, 5, 1), Err(Error::NoPairableItems)));
    }

    #[test]
    fn disattenuation_examples() {
        let rho = |r, a, b| {
            disattenuated_rho(DisattenuationInputs {
                r_xy: r,
                reliability_x: a,
                reliability_y: b,
            })
        };
        assert!((rho(0.5, 1.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((rho(0.5, 0.25, 1.0).unwrap() - 1.0).abs() < 1e-15);
        // 0.6 / sqrt(0.4)
        assert!((rho(0.6, 0.5, 0.8).unwrap() - 0.9487).abs() < 5e-5);
        assert!(matches!(rho(0.5, -0.1, 1.0), Err(Error::NonPositiveReliability(_))));
    }
}
