//! Cross-replication reliability (cross-kappa).
//!
//! Observed disagreement pairs every X annotation with every Y annotation on
//! the same item; each item is normalized by `R(i) * S(i)` and weighted by
//! `(R(i) + S(i)) / (R + S)`. Expected disagreement averages over every X/Y
//! annotation pair regardless of item, normalized by `R * S`.
//!
//! [`kappa_x`] evaluates both terms from per-item sufficient statistics in
//! time linear in the number of annotations. [`kappa_x_naive`] enumerates the
//! pairs literally and exists as a test oracle.

use crate::distance::disagreement_unchecked;
use crate::error::{Error, Result};
use crate::irr::{MetricKind, ReliabilityEstimate};
use crate::model::{ItemStats, ItemSummary, PairedLabelView, Scale};

/// Pair-count ceiling for [`kappa_x_naive`].
pub const NAIVE_PAIR_LIMIT: u128 = 100_000_000;

/// Cross-kappa between the two sides of `view`.
pub fn kappa_x(view: &PairedLabelView) -> Result<ReliabilityEstimate> {
    kappa_x_items(view.x.iter().zip(view.y.iter()), view.scale, view.n_categories())
}

/// Mean of (x - y)^2 over all cross pairs, from sums and sums of squares.
/// Written as var_x + var_y + (mean_x - mean_y)^2 so that swapping the sides
/// gives a bit-identical result.
fn mean_square_difference(s1x: f64, s2x: f64, r: f64, s1y: f64, s2y: f64, s: f64) -> f64 {
    let (mx, my) = (s1x / r, s1y / s);
    let vx = (s2x / r - mx * mx).max(0.0);
    let vy = (s2y / s - my * my).max(0.0);
    (vx + vy) + (mx - my) * (mx - my)
}

pub(crate) fn kappa_x_items<'a>(
    pairs: impl IntoIterator<Item = (&'a ItemStats, &'a ItemStats)>,
    scale: Scale,
    n_categories: usize,
) -> Result<ReliabilityEstimate> {
    let mut n_items = 0usize;
    let mut total_x = 0u64;
    let mut total_y = 0u64;
    let mut weighted_observed = 0.0;
    let mut pooled_x = vec![0u64; n_categories];
    let mut pooled_y = vec![0u64; n_categories];
    let (mut sum_x, mut sum_sq_x, mut sum_y, mut sum_sq_y) = (0.0, 0.0, 0.0, 0.0);

    for (x, y) in pairs {
        if x.count == 0 || y.count == 0 {
            continue;
        }
        n_items += 1;
        let (r, s) = (x.count as u64, y.count as u64);
        total_x += r;
        total_y += s;
        let within = match (&x.summary, &y.summary) {
            (ItemSummary::Categorical(cx), ItemSummary::Categorical(cy)) => {
                let mut agreeing = 0u64;
                for k in 0..n_categories {
                    agreeing += cx[k] as u64 * cy[k] as u64;
                    pooled_x[k] += cx[k] as u64;
                    pooled_y[k] += cy[k] as u64;
                }
                (r * s - agreeing) as f64 / (r * s) as f64
            }
            (
                ItemSummary::Interval { sum: s1x, sum_sq: s2x },
                ItemSummary::Interval { sum: s1y, sum_sq: s2y },
            ) => {
                sum_x += s1x;
                sum_sq_x += s2x;
                sum_y += s1y;
                sum_sq_y += s2y;
                mean_square_difference(*s1x, *s2x, r as f64, *s1y, *s2y, s as f64)
            }
            _ => unreachable!("both sides share the view's scale"),
        };
        weighted_observed += (r + s) as f64 * within;
    }
    if n_items == 0 {
        return Err(Error::EmptyView);
    }
    let observed = weighted_observed / (total_x + total_y) as f64;
    let expected = match scale {
        Scale::Categorical => {
            let all = total_x as u128 * total_y as u128;
            let agreeing: u128 = pooled_x
                .iter()
                .zip(&pooled_y)
                .map(|(&a, &b)| a as u128 * b as u128)
                .sum();
            (all - agreeing) as f64 / all as f64
        }
        Scale::Interval => {
            mean_square_difference(sum_x, sum_sq_x, total_x as f64, sum_y, sum_sq_y, total_y as f64)
        }
    };
    ReliabilityEstimate::from_disagreement(
        MetricKind::Xrr,
        observed,
        expected,
        n_items,
        vec![total_x as usize, total_y as usize],
    )
}

/// Cross-kappa by literal enumeration of every annotation pair.
///
/// Refuses inputs whose pair count `n^2 * max R * max S` exceeds
/// [`NAIVE_PAIR_LIMIT`].
pub fn kappa_x_naive(view: &PairedLabelView) -> Result<ReliabilityEstimate> {
    let n = view.len() as u128;
    if n == 0 {
        return Err(Error::EmptyView);
    }
    let max_r = view.x.iter().map(|i| i.count).max().unwrap_or(0) as u128;
    let max_s = view.y.iter().map(|i| i.count).max().unwrap_or(0) as u128;
    let pairs = n * n * max_r * max_s;
    if pairs > NAIVE_PAIR_LIMIT {
        return Err(Error::OracleTooLarge {
            pairs,
            limit: NAIVE_PAIR_LIMIT,
        });
    }
    let total_x: usize = view.total_x();
    let total_y: usize = view.total_y();

    let mut observed = 0.0;
    for (x, y) in view.x.iter().zip(&view.y) {
        let weight = (x.count + y.count) as f64 / (total_x + total_y) as f64;
        let mut sum = 0.0;
        for a in &x.annotations {
            for b in &y.annotations {
                sum += disagreement_unchecked(a.value, b.value);
            }
        }
        observed += weight * sum / (x.count as f64 * y.count as f64);
    }

    let mut sum = 0.0;
    for x in &view.x {
        for y in &view.y {
            for a in &x.annotations {
                for b in &y.annotations {
                    sum += disagreement_unchecked(a.value, b.value);
                }
            }
        }
    }
    let expected = sum / (total_x as f64 * total_y as f64);
    ReliabilityEstimate::from_disagreement(
        MetricKind::Xrr,
        observed,
        expected,
        view.len(),
        vec![total_x, total_y],
    )
}
