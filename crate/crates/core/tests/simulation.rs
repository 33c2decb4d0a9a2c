use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xrr_core::model::pair_views;
use xrr_core::simulate::LABEL;
use xrr_core::{
    analytic_irr, analytic_kappa_x, bootstrap_ci, bootstrap_distribution, generate_pair, kappa_x, kappa_x_naive,
    BootstrapConfig, BootstrapInput, BootstrapMetric, Pool, SimulationConfig,
};

fn view(cfg: &SimulationConfig) -> xrr_core::PairedLabelView {
    pair_views(&generate_pair(cfg).unwrap(), LABEL, "X", "Y").unwrap()
}

#[test]
fn balanced_example_matches_closed_form() {
    let cfg = SimulationConfig {
        n_items: 50_000,
        ..Default::default()
    };
    let analytic = analytic_kappa_x(&cfg).unwrap();
    assert!((analytic - 0.64).abs() < 1e-12);
    let empirical = kappa_x(&view(&cfg)).unwrap().value;
    assert!((empirical - 0.64).abs() <= 0.01, "{empirical}");
}

/// Population kappa_x by enumerating every outcome of one within-item cross
/// pair (for p_o) and one cross pair from two independent items (for p_e).
fn enumerated(cfg: &SimulationConfig, same_pool: Option<Pool>) -> f64 {
    let (pi, lambda) = (cfg.prevalence, cfg.latent_agreement);
    let (ax, ay) = match same_pool {
        Some(Pool::X) => (cfg.accuracy_x, cfg.accuracy_x),
        Some(Pool::Y) => (cfg.accuracy_y, cfg.accuracy_y),
        None => (cfg.accuracy_x, cfg.accuracy_y),
    };
    let bern = |p: f64, v: u8| if v == 1 { p } else { 1.0 - p };
    let answer = |acc: f64, truth: u8, v: u8| if v == truth { acc } else { 1.0 - acc };
    // Joint law of the two latent states of one item, as seen by the two sides.
    let latent = |tx: u8, ty: u8| -> f64 {
        if same_pool.is_some() {
            return if tx == ty { bern(pi, tx) } else { 0.0 };
        }
        let redraw = (1.0 - lambda) * bern(pi, tx) * bern(pi, ty);
        let same = if tx == ty { lambda * bern(pi, tx) } else { 0.0 };
        same + redraw
    };
    let mut p_o = 0.0;
    let mut p_e = 0.0;
    for tx in 0..2u8 {
        for ty in 0..2u8 {
            for x in 0..2u8 {
                for y in 0..2u8 {
                    if x == y {
                        p_o += latent(tx, ty) * answer(ax, tx, x) * answer(ay, ty, y);
                        // Independent items: the Y-side latent has its marginal law.
                        p_e += bern(pi, tx) * bern(pi, ty) * answer(ax, tx, x) * answer(ay, ty, y);
                    }
                }
            }
        }
    }
    (p_o - p_e) / (1.0 - p_e)
}

#[test]
fn analytic_formulas_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..500 {
        let cfg = SimulationConfig {
            prevalence: rng.random_range(0.01..0.99),
            accuracy_x: rng.random_range(0.51..=1.0),
            accuracy_y: rng.random_range(0.51..=1.0),
            latent_agreement: rng.random_range(0.0..=1.0),
            ..Default::default()
        };
        let k = analytic_kappa_x(&cfg).unwrap();
        assert!((k - enumerated(&cfg, None)).abs() < 1e-12, "{cfg:?}");
        for pool in [Pool::X, Pool::Y] {
            let irr = analytic_irr(&cfg, pool).unwrap();
            assert!((irr - enumerated(&cfg, Some(pool))).abs() < 1e-12, "{cfg:?}");
        }
    }
}

#[test]
fn closed_form_agrees_with_naive_oracle_at_small_n() {
    let base = SimulationConfig {
        n_items: 100,
        prevalence: 0.4,
        accuracy_x: 0.9,
        accuracy_y: 0.8,
        ..Default::default()
    };
    let values: Vec<f64> = (0..300)
        .map(|seed| kappa_x_naive(&view(&SimulationConfig { seed, ..base.clone() })).unwrap().value)
        .collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let analytic = analytic_kappa_x(&base).unwrap();
    assert!((mean - analytic).abs() <= 3.0 * sd / n.sqrt(), "mean {mean} analytic {analytic} sd {sd}");
}

#[test]
fn independent_replications_show_no_agreement() {
    for (seed, prevalence) in [(21, 0.5), (22, 0.2), (23, 0.05)] {
        let cfg = SimulationConfig {
            n_items: 20_000,
            prevalence,
            latent_agreement: 0.0,
            seed,
            ..Default::default()
        };
        assert!(analytic_kappa_x(&cfg).unwrap().abs() < 1e-15);
        let v = view(&cfg);
        let dist = bootstrap_distribution(
            BootstrapInput::View(&v),
            BootstrapMetric::Xrr,
            &BootstrapConfig {
                replicates: 200,
                level: 0.95,
                seed,
            },
        )
        .unwrap();
        let z = dist.point.value.abs() / dist.standard_error();
        assert!(z <= 3.0, "prevalence {prevalence}: kappa_x {} is {z:.2} SE from 0", dist.point.value);
    }
}

#[test]
fn class_imbalance_squeezes_kappa_x() {
    let at = |prevalence: f64| {
        analytic_kappa_x(&SimulationConfig {
            prevalence,
            accuracy_x: 0.9,
            accuracy_y: 0.85,
            latent_agreement: 0.8,
            ..Default::default()
        })
        .unwrap()
    };
    let grid: Vec<f64> = (1..50).map(|k| k as f64 / 100.0).collect();
    for w in grid.windows(2) {
        assert!(at(w[0]) < at(w[1]), "towards 0 at {}", w[0]);
        assert!(at(1.0 - w[0]) < at(1.0 - w[1]), "towards 1 at {}", w[0]);
    }
}

#[test]
fn interval_width_shrinks_with_more_items() {
    let mut medians = Vec::new();
    for n_items in [100, 1000, 10_000] {
        let mut widths: Vec<f64> = (0..9)
            .map(|seed| {
                let cfg = SimulationConfig {
                    n_items,
                    prevalence: 0.3,
                    accuracy_x: 0.85,
                    accuracy_y: 0.85,
                    seed,
                    ..Default::default()
                };
                let v = view(&cfg);
                let est = bootstrap_ci(
                    BootstrapInput::View(&v),
                    BootstrapMetric::Xrr,
                    &BootstrapConfig {
                        replicates: 200,
                        level: 0.95,
                        seed,
                    },
                )
                .unwrap();
                let ci = est.ci.unwrap();
                assert!(ci.lower <= est.value && est.value <= ci.upper);
                ci.upper - ci.lower
            })
            .collect();
        widths.sort_by(f64::total_cmp);
        medians.push(widths[widths.len() / 2]);
    }
    assert!(medians.windows(2).all(|w| w[1] <= w[0]), "{medians:?}");
}

#[test]
fn generation_is_deterministic_per_seed() {
    let cfg = SimulationConfig {
        n_items: 300,
        annotations_x: "1..4".parse().unwrap(),
        latent_agreement: 0.6,
        ..Default::default()
    };
    assert_eq!(generate_pair(&cfg).unwrap(), generate_pair(&cfg).unwrap());
    assert_ne!(generate_pair(&cfg).unwrap(), generate_pair(&SimulationConfig { seed: 43, ..cfg }).unwrap());
}
