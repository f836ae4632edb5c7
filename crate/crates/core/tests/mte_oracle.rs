//! Marginal-rate estimates against the simulator's closed-form curve.

use persuasion::dist::{ingest_micro, MicroSample};
use persuasion::mte::{
    estimate_exposure_curve, integrate_policy, theta_mte_curve, Link, PolicyWeight,
};
use persuasion::sim::{
    simulate, true_mte, true_values, BeliefPoint, DgpConfig, InstrumentLaw, ShockLaw,
};

fn continuous_config(rho: f64) -> DgpConfig {
    DgpConfig {
        beliefs: vec![
            BeliefPoint {
                q0: 1.0 / 3.0,
                q1: 0.5,
                prob: 0.6,
            },
            BeliefPoint {
                q0: 0.2,
                q1: 0.7,
                prob: 0.4,
            },
        ],
        shock: ShockLaw::Exponential { rate: 1.0 },
        rho,
        instrument: InstrumentLaw::Continuous { a: 0.0, b: 1.5 },
        outside_share: None,
        seed: 0,
    }
}

fn inner_grid() -> Vec<f64> {
    (10..=90).map(|i| i as f64 / 100.0).collect()
}

#[test]
fn homogeneous_selection_gives_a_flat_curve_at_theta() {
    let cfg = continuous_config(0.0);
    let truth = true_values(&cfg).unwrap().theta;
    let s = simulate(&cfg, 100_000, 21).unwrap();
    let fit = theta_mte_curve(&s, &inner_grid(), Link::Probit, 2).unwrap();
    for (v, m) in fit.curve.grid.iter().zip(&fit.curve.values) {
        let m = m.expect("defined");
        assert!((m - truth).abs() < 0.05, "v = {v}: {m} vs {truth}");
    }
    let avg = integrate_policy(&fit.curve, &PolicyWeight::Uniform)
        .unwrap()
        .value;
    assert!((avg - truth).abs() < 0.02, "{avg} vs {truth}");
}

#[test]
fn selection_on_gains_tracks_the_true_curve() {
    let cfg = continuous_config(-0.3);
    let truth = true_values(&cfg).unwrap().theta;
    let s = simulate(&cfg, 100_000, 22).unwrap();
    // The quadratic index is least reliable near the ends of the exposure
    // range, so the pointwise check uses the central part of the grid.
    let grid: Vec<f64> = (20..=80).map(|i| i as f64 / 100.0).collect();
    let fit = theta_mte_curve(&s, &grid, Link::Probit, 2).unwrap();
    let exact: Vec<f64> = grid.iter().map(|v| true_mte(&cfg, *v).unwrap()).collect();
    let slope = exact[exact.len() - 1] - exact[0];
    assert!(slope.abs() > 0.05, "curve should vary along v");
    for (k, m) in fit.curve.values.iter().enumerate() {
        let m = m.expect("defined");
        assert!(
            (m - exact[k]).abs() < 0.05,
            "v = {}: {m} vs {}",
            grid[k],
            exact[k]
        );
    }
    let est_slope = fit.curve.values[grid.len() - 1].unwrap() - fit.curve.values[0].unwrap();
    assert_eq!(est_slope.signum(), slope.signum());
    // With selection on gains the unweighted average is not theta; the
    // untreated-outcome weight recovers it over the integrated range.
    let full = theta_mte_curve(&s, &[], Link::Probit, 2).unwrap();
    let avg = integrate_policy(&full.curve, &PolicyWeight::UntreatedOutcome)
        .unwrap()
        .value;
    assert!((avg - truth).abs() < 0.02, "{avg} vs {truth}");
}

#[test]
fn curve_is_invariant_to_affine_rescaling_of_the_instrument() {
    let cfg = continuous_config(0.3);
    let s = simulate(&cfg, 20_000, 23).unwrap();
    let rows = s
        .records
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.z = 3.0 * r.z - 7.0;
            r
        })
        .collect();
    let t: MicroSample = ingest_micro(rows, s.mode, s.instrument).unwrap();
    let grid = inner_grid();
    for link in [Link::Probit, Link::Logit] {
        let a = theta_mte_curve(&s, &grid, link, 2).unwrap().curve;
        let b = theta_mte_curve(&t, &grid, link, 2).unwrap().curve;
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x.unwrap() - y.unwrap()).abs() < 1e-8);
        }
    }
}

#[test]
fn exposure_fit_is_monotone_and_accurate() {
    let cfg = continuous_config(0.0);
    let s = simulate(&cfg, 50_000, 24).unwrap();
    let m = estimate_exposure_curve(&s, Link::Probit).unwrap();
    let mut zs: Vec<f64> = s.records.iter().map(|r| r.z).collect();
    zs.sort_by(|a, b| a.total_cmp(b));
    let q = |p: f64| zs[(p * (zs.len() - 1) as f64) as usize];
    let mut prev = f64::NEG_INFINITY;
    let mut worst: f64 = 0.0;
    for i in 0..=90 {
        let z = q(0.05 + 0.01 * i as f64);
        let e = m.exposure(z);
        assert!(e >= prev);
        prev = e;
        worst = worst.max((e - cfg.exposure(z)).abs());
    }
    assert!(worst < 0.02, "{worst}");
}

#[test]
fn grid_outside_support_and_few_instrument_values_are_errors() {
    let cfg = continuous_config(0.0);
    let s = simulate(&cfg, 2_000, 25).unwrap();
    assert!(theta_mte_curve(&s, &[0.5, 1.0], Link::Probit, 2).is_err());
    let rows = s
        .records
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.z = (r.z * 2.0).round();
            r
        })
        .collect();
    let coarse = ingest_micro(rows, s.mode, s.instrument).unwrap();
    assert!(estimate_exposure_curve(&coarse, Link::Probit).is_err());
}
