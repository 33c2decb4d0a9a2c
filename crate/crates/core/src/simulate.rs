//! Synthetic replication pairs with known population agreement.
//!
//! Each item has a latent binary state `t ~ Bernoulli(prevalence)`. Pool X
//! sees `t`; pool Y sees the same state with probability `latent_agreement`
//! and an independent redraw otherwise. Every annotation in pool P reports
//! the state it sees with probability `accuracy_P` and flips it otherwise.
//! With `latent_agreement = 1` both pools measure the same latent truth.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AnnotationTable, RawValueRef, Scale, TableBuilder};

pub const REPLICATION_X: &str = "X";
pub const REPLICATION_Y: &str = "Y";
pub const LABEL: &str = "label";

/// Annotations per item in one pool.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnnotationCount {
    Fixed(u32),
    /// Uniform over `min..=max`, drawn per item.
    Range { min: u32, max: u32 },
}

impl AnnotationCount {
    fn validate(&self, name: &str) -> Result<()> {
        let ok = match *self {
            AnnotationCount::Fixed(n) => n >= 1,
            AnnotationCount::Range { min, max } => min >= 1 && min <= max,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("{name}: counts must be >= 1 with min <= max")))
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> u32 {
        match *self {
            AnnotationCount::Fixed(n) => n,
            AnnotationCount::Range { min, max } => rng.random_range(min..=max),
        }
    }
}

impl std::str::FromStr for AnnotationCount {
    type Err = String;

    /// Parses `3` or `1..3` / `1-3`.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        let parse = |t: &str| t.trim().parse::<u32>().map_err(|e| format!("bad count `{t}`: {e}"));
        if let Some((a, b)) = s.split_once("..").or_else(|| s.split_once('-')) {
            Ok(AnnotationCount::Range {
                min: parse(a)?,
                max: parse(b.trim_start_matches('='))?,
            })
        } else {
            Ok(AnnotationCount::Fixed(parse(s)?))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n_items: usize,
    pub prevalence: f64,
    pub accuracy_x: f64,
    pub accuracy_y: f64,
    pub annotations_x: AnnotationCount,
    pub annotations_y: AnnotationCount,
    /// Probability that pool Y sees the same latent state as pool X.
    pub latent_agreement: f64,
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            n_items: 1000,
            prevalence: 0.5,
            accuracy_x: 0.9,
            accuracy_y: 0.9,
            annotations_x: AnnotationCount::Fixed(2),
            annotations_y: AnnotationCount::Fixed(2),
            latent_agreement: 1.0,
            seed: 42,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pool {
    X,
    Y,
}

impl SimulationConfig {
    /// Checks everything except the prevalence.
    fn validate_rest(&self) -> Result<()> {
        if self.n_items == 0 {
            return Err(Error::InvalidConfig("n_items must be >= 1".into()));
        }
        for (name, a) in [("accuracy_x", self.accuracy_x), ("accuracy_y", self.accuracy_y)] {
            if !(a > 0.5 && a <= 1.0) {
                return Err(Error::InvalidConfig(format!("{name} must be in (0.5, 1], got {a}")));
            }
        }
        if !(0.0..=1.0).contains(&self.latent_agreement) {
            return Err(Error::InvalidConfig(format!(
                "latent_agreement must be in [0, 1], got {}",
                self.latent_agreement
            )));
        }
        self.annotations_x.validate("annotations_x")?;
        self.annotations_y.validate("annotations_y")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.prevalence > 0.0 && self.prevalence < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "prevalence must be in (0, 1), got {}",
                self.prevalence
            )));
        }
        self.validate_rest()
    }

    fn accuracy(&self, pool: Pool) -> f64 {
        match pool {
            Pool::X => self.accuracy_x,
            Pool::Y => self.accuracy_y,
        }
    }

    /// Probability that an annotation from `pool` is positive.
    pub fn positive_rate(&self, pool: Pool) -> f64 {
        let a = self.accuracy(pool);
        self.prevalence * a + (1.0 - self.prevalence) * (1.0 - a)
    }

    /// Checks prevalence for the analytic formulas: the open interval is
    /// required, and the endpoints are reported as a lack of item signal.
    fn validate_analytic(&self) -> Result<()> {
        if self.prevalence == 0.0 || self.prevalence == 1.0 {
            self.validate_rest()?;
            return Err(Error::NoItemSignal(self.prevalence));
        }
        self.validate()
    }
}

/// Generates replications `X` and `Y` of a single binary label.
pub fn generate_pair(config: &SimulationConfig) -> Result<AnnotationTable> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut builder = TableBuilder::new(BTreeMap::from([(LABEL.to_string(), Scale::Categorical)]));
    let width = config.n_items.to_string().len();
    let mut slot_names: Vec<String> = Vec::new();
    let slot = |k: usize, names: &mut Vec<String>| {
        while names.len() <= k {
            names.push(format!("rater_{}", names.len() + 1));
        }
    };

    for i in 0..config.n_items {
        let item = format!("item_{i:0width$}");
        let truth_x = rng.random_bool(config.prevalence);
        let truth_y = if rng.random_bool(config.latent_agreement) {
            truth_x
        } else {
            rng.random_bool(config.prevalence)
        };
        for (pool, rep, truth, count) in [
            (Pool::X, REPLICATION_X, truth_x, config.annotations_x),
            (Pool::Y, REPLICATION_Y, truth_y, config.annotations_y),
        ] {
            let m = count.draw(&mut rng) as usize;
            slot(m, &mut slot_names);
            for k in 0..m {
                let correct = rng.random_bool(config.accuracy(pool));
                let value = if correct == truth { "1" } else { "0" };
                builder.push(rep, &item, &slot_names[k], LABEL, RawValueRef::Category(value), None)?;
            }
        }
    }
    builder.build()
}

/// Population cross-kappa under the generative model.
pub fn analytic_kappa_x(config: &SimulationConfig) -> Result<f64> {
    config.validate_analytic()?;
    let (pi, lambda) = (config.prevalence, config.latent_agreement);
    let (ax, ay) = (config.accuracy_x, config.accuracy_y);
    let same = ax * ay + (1.0 - ax) * (1.0 - ay);
    let differ = ax * (1.0 - ay) + (1.0 - ax) * ay;
    // The latent states differ only when Y redraws and lands elsewhere.
    let latent_differ = (1.0 - lambda) * 2.0 * pi * (1.0 - pi);
    let p_o = same - latent_differ * (same - differ);
    let (qx, qy) = (config.positive_rate(Pool::X), config.positive_rate(Pool::Y));
    let p_e = qx * qy + (1.0 - qx) * (1.0 - qy);
    chance_corrected(p_o, p_e)
}

/// Population IRR of one pool under the generative model.
pub fn analytic_irr(config: &SimulationConfig, pool: Pool) -> Result<f64> {
    config.validate_analytic()?;
    let a = config.accuracy(pool);
    let q = config.positive_rate(pool);
    chance_corrected(a * a + (1.0 - a) * (1.0 - a), q * q + (1.0 - q) * (1.0 - q))
}

fn chance_corrected(p_o: f64, p_e: f64) -> Result<f64> {
    if p_e >= 1.0 {
        return Err(Error::DegenerateData("chance agreement is 1".into()));
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::pair_views;
    use crate::xrr::kappa_x;

    #[test]
    fn perfect_raters_give_perfect_agreement() {
        let cfg = SimulationConfig {
            n_items: 200,
            accuracy_x: 1.0,
            accuracy_y: 1.0,
            ..Default::default()
        };
        let table = generate_pair(&cfg).unwrap();
        let view = pair_views(&table, LABEL, REPLICATION_X, REPLICATION_Y).unwrap();
        assert_eq!(kappa_x(&view).unwrap().value, 1.0);
        assert_eq!(analytic_kappa_x(&cfg).unwrap(), 1.0);
    }

    #[test]
    fn coin_flip_raters_are_rejected() {
        let cfg = SimulationConfig {
            accuracy_x: 0.5,
            ..Default::default()
        };
        assert!(matches!(generate_pair(&cfg), Err(Error::InvalidConfig(_))));
        assert!(matches!(analytic_kappa_x(&cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn boundary_prevalence_is_flagged() {
        for pi in [0.0, 1.0] {
            let cfg = SimulationConfig {
                prevalence: pi,
                ..Default::default()
            };
            assert!(matches!(analytic_kappa_x(&cfg), Err(Error::NoItemSignal(_))));
            assert!(matches!(generate_pair(&cfg), Err(Error::InvalidConfig(_))));
        }
    }

    #[test]
    fn balanced_example_value() {
        let cfg = SimulationConfig::default();
        assert!((analytic_kappa_x(&cfg).unwrap() - 0.64).abs() < 1e-12);
    }

    #[test]
    fn generation_is_deterministic_and_counts_match() {
        let cfg = SimulationConfig {
            n_items: 50,
            annotations_x: AnnotationCount::Range { min: 1, max: 3 },
            annotations_y: AnnotationCount::Fixed(2),
            ..Default::default()
        };
        let a = generate_pair(&cfg).unwrap();
        let b = generate_pair(&cfg).unwrap();
        assert_eq!(a, b);
        let y = crate::model::item_stats(&a, LABEL, REPLICATION_Y).unwrap();
        assert_eq!(y.total_annotations(), 100);
    }

    #[test]
    fn count_parsing() {
        assert_eq!("3".parse::<AnnotationCount>().unwrap(), AnnotationCount::Fixed(3));
        assert_eq!(
            "1..4".parse::<AnnotationCount>().unwrap(),
            AnnotationCount::Range { min: 1, max: 4 }
        );
        assert_eq!(
            "2-5".parse::<AnnotationCount>().unwrap(),
            AnnotationCount::Range { min: 2, max: 5 }
        );
    }
}
