//! Item-block bootstrap confidence intervals.
//!
//! Each replicate draws `n` items with replacement and carries every
//! annotation the item has (in both replications for paired metrics), so
//! within-item dependence is preserved. The intervals describe item-sampling
//! uncertainty only; they say nothing about variation between rater pools.
//!
//! Replicate `r` draws from ChaCha8 stream `r` of the master seed, so results
//! do not depend on how replicates are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::irr::{iota, iota_items, ConfidenceInterval, MetricKind, ReliabilityEstimate};
use crate::model::{LabelItemStats, PairedLabelView};
use crate::similarity::{normalize, normalized_kappa_x};
use crate::xrr::{kappa_x, kappa_x_items};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub level: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replicates: 1000,
            level: 0.95,
            seed: 42,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(Error::InvalidBootstrapConfig(format!(
                "need at least 2 replicates, got {}",
                self.replicates
            )));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::InvalidBootstrapConfig(format!(
                "level must be in (0, 1), got {}",
                self.level
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BootstrapMetric {
    Irr,
    Xrr,
    Normalized,
}

impl std::str::FromStr for BootstrapMetric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "irr" => Ok(Self::Irr),
            "xrr" | "kappa_x" => Ok(Self::Xrr),
            "normalized" | "normalized_xrr" => Ok(Self::Normalized),
            other => Err(format!("unknown metric `{other}` (expected irr, xrr or normalized)")),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub enum BootstrapInput<'a> {
    /// One replication; for IRR.
    Stats(&'a LabelItemStats),
    /// Two aligned replications; for cross-kappa and normalized cross-kappa.
    View(&'a PairedLabelView),
}

/// Point estimate plus the raw replicate values.
#[derive(Clone, Debug)]
pub struct BootstrapDistribution {
    pub point: ReliabilityEstimate,
    /// Non-degenerate replicate values in replicate order.
    pub values: Vec<f64>,
    pub discarded: usize,
}

impl BootstrapDistribution {
    /// Sample standard deviation of the replicate values.
    pub fn standard_error(&self) -> f64 {
        let n = self.values.len() as f64;
        let mean = self.values.iter().sum::<f64>() / n;
        let ss: f64 = self.values.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / (n - 1.0)).sqrt()
    }

    /// Percentile interval at `level`, interpolating between order statistics.
    pub fn percentile_interval(&self, level: f64) -> (f64, f64) {
        let mut sorted = self.values.clone();
        sorted.sort_by(f64::total_cmp);
        let tail = (1.0 - level) / 2.0;
        (percentile(&sorted, tail), percentile(&sorted, 1.0 - tail))
    }
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let rank = q * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Computes the point estimate and every bootstrap replicate.
pub fn bootstrap_distribution(
    input: BootstrapInput<'_>,
    metric: BootstrapMetric,
    config: &BootstrapConfig,
) -> Result<BootstrapDistribution> {
    config.validate()?;
    let (point, n): (ReliabilityEstimate, usize) = match (metric, input) {
        (BootstrapMetric::Irr, BootstrapInput::Stats(stats)) => (iota(stats)?, stats.len()),
        (BootstrapMetric::Xrr, BootstrapInput::View(view)) => (kappa_x(view)?, view.len()),
        (BootstrapMetric::Normalized, BootstrapInput::View(view)) => {
            let kx = kappa_x(view)?;
            let irr_x = iota(&view.x_stats())?;
            let irr_y = iota(&view.y_stats())?;
            (normalized_kappa_x(&kx, &irr_x, &irr_y)?, view.len())
        }
        (BootstrapMetric::Irr, BootstrapInput::View(_)) => {
            return Err(Error::InvalidBootstrapConfig(
                "IRR is bootstrapped from a single replication's stats".into(),
            ))
        }
        (_, BootstrapInput::Stats(_)) => {
            return Err(Error::InvalidBootstrapConfig(
                "cross-replication metrics need a paired view".into(),
            ))
        }
    };

    let outcomes: Vec<Result<f64>> = (0..config.replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(r as u64);
            let picks: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            replicate(input, metric, &picks)
        })
        .collect();

    let mut values = Vec::with_capacity(outcomes.len());
    let mut discarded = 0;
    for outcome in outcomes {
        match outcome {
            Ok(v) => values.push(v),
            Err(e) if e.is_degenerate() || matches!(e, Error::EmptyView) => discarded += 1,
            Err(e) => return Err(e),
        }
    }
    if values.is_empty() {
        return Err(Error::AllReplicatesDegenerate(config.replicates));
    }
    Ok(BootstrapDistribution {
        point,
        values,
        discarded,
    })
}

fn replicate(input: BootstrapInput<'_>, metric: BootstrapMetric, picks: &[usize]) -> Result<f64> {
    match input {
        BootstrapInput::Stats(stats) => Ok(iota_items(
            picks.iter().map(|&i| &stats.items[i]),
            stats.scale,
            stats.n_categories(),
            stats.n_slots,
        )?
        .value),
        BootstrapInput::View(view) => {
            let kx = kappa_x_items(
                picks.iter().map(|&i| (&view.x[i], &view.y[i])),
                view.scale,
                view.n_categories(),
            )?
            .value;
            if metric == BootstrapMetric::Xrr {
                return Ok(kx);
            }
            let irr = |side: &[crate::model::ItemStats]| {
                iota_items(
                    picks.iter().map(|&i| &side[i]),
                    view.scale,
                    view.n_categories(),
                    view.n_slots,
                )
                .map(|e| e.value)
            };
            normalize(kx, irr(&view.x)?, irr(&view.y)?)
        }
    }
}

/// Point estimate with a percentile bootstrap interval attached.
pub fn bootstrap_ci(
    input: BootstrapInput<'_>,
    metric: BootstrapMetric,
    config: &BootstrapConfig,
) -> Result<ReliabilityEstimate> {
    let dist = bootstrap_distribution(input, metric, config)?;
    let (lower, upper) = dist.percentile_interval(config.level);
    let mut estimate = dist.point;
    estimate.ci = Some(ConfidenceInterval {
        lower,
        upper,
        level: config.level,
        replicates: config.replicates,
        seed: config.seed,
        discarded: dist.discarded,
    });
    debug_assert!(matches!(
        estimate.kind,
        MetricKind::Irr | MetricKind::Xrr | MetricKind::NormalizedXrr
    ));
    Ok(estimate)
}
