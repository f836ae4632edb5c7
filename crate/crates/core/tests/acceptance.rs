//! Acceptance checks. Runs without the libtest harness so that one line per
//! criterion is always printed; exits nonzero if any criterion fails.

mod support;

use std::time::{Duration, Instant};

use persuasion::binary::{
    dk_estimands, fundraising_bounds, itt, manski_potential_bounds, theta_bounds, theta_l,
    theta_l_star, theta_star, theta_ue,
};
use persuasion::dist::{
    expand_counts, ingest_micro, tabulate_joint, tabulate_outcome, ArmCells, InstrumentKind,
    JointDist, MicroRecord, MicroSample, MultScenarioData, OutcomeMode, Scenario, ScenarioData,
    TwoMarginals,
};
use persuasion::efficiency::{aggregate_theta_l, aggregate_theta_star, cell_conditional_estimates};
use persuasion::inference::{
    bootstrap_se, ci_itt, ci_theta, ci_theta_local, influence_values, CiMethod, Estimator,
    InferenceInput, Target,
};
use persuasion::mte::{
    fitted_value, integrate_policy, outcome_derivatives, theta_mte_curve, Link, PolicyWeight,
};
use persuasion::multinomial::{mult_bounds, MultCase};
use persuasion::sim::{
    coverage_study, sharpness_oracle, simulate, true_values, BeliefPoint, CellMixture,
    CoverageMethod, DgpConfig, InstrumentLaw, MixtureCell, ShockLaw,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use support::mult_oracle::{lp_range, observables, random_population, Info};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn newspaper() -> MicroSample {
    let rows = expand_counts(&[
        (0, Some(0), 1, 94),
        (0, Some(1), 1, 93),
        (1, Some(0), 1, 31),
        (1, Some(1), 1, 68),
        (0, Some(0), 0, 162),
        (0, Some(1), 0, 130),
        (1, Some(0), 0, 46),
        (1, Some(1), 0, 77),
    ]);
    ingest_micro(rows, OutcomeMode::Binary, InstrumentKind::Binary).unwrap()
}

fn binary_config(rho: f64, seed: u64) -> DgpConfig {
    DgpConfig {
        beliefs: vec![
            BeliefPoint {
                q0: 0.3,
                q1: 0.6,
                prob: 0.5,
            },
            BeliefPoint {
                q0: 0.1,
                q1: 0.4,
                prob: 0.5,
            },
        ],
        shock: ShockLaw::Exponential { rate: 1.5 },
        rho,
        instrument: InstrumentLaw::Binary {
            e0: 0.2,
            e1: 0.6,
            p_z1: 0.5,
        },
        outside_share: None,
        seed,
    }
}

fn golden_suite() -> Check {
    let start = Instant::now();
    let s = newspaper();
    let j = tabulate_joint(&s).map_err(err)?;
    let m = j.to_two_marginals();
    let dk = dk_estimands(&m).map_err(err)?;
    let full = theta_bounds(&ScenarioData::FullJoint(j)).map_err(err)?;
    let values = [
        ("ITT", itt(&m.to_outcome_only()), 0.0498),
        ("theta_L", full.lo, 0.0707),
        ("theta_U", full.hi, 0.6343),
        ("theta_Ue", theta_ue(&m).map_err(err)?, 0.7832),
        ("Wald", dk.wald, 0.7759),
        ("theta*", theta_star(&j).map_err(err)?, 0.8067),
        ("theta_L*", theta_l_star(&m).map_err(err)?, 0.7759),
        ("dk_tilde", dk.dk_tilde, 1.1027),
    ];
    let elapsed = start.elapsed();
    let mut worst: f64 = 0.0;
    for (name, got, want) in values {
        // Published values are rounded to four places.
        let d = (got - want).abs();
        worst = worst.max(d);
        ensure(d <= 0.0001 + 1e-12, || {
            format!("{name} = {got:.6}, expected {want}")
        })?;
    }
    ensure(elapsed < Duration::from_secs(1), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!("8 values, max deviation {worst:.2e}"))
}

fn turnout_suite() -> Check {
    // y(1), y(0), e(1) - e(0), dk_tilde, theta_L, theta_L* in percent.
    let rows = [
        (47.2, 44.8, 27.9, 15.6, 4.3, 8.6),
        (31.0, 28.6, 29.3, 11.5, 3.4, 8.2),
        (71.1, 66.0, 73.7, 20.4, 15.0, 15.0),
        (41.6, 40.5, 41.4, 4.5, 1.8, 2.7),
        (45.5, 43.5, 80.0, 4.4, 3.5, 3.5),
        (70.0, 69.0, 25.0, 12.9, 3.2, 4.0),
    ];
    let mut worst: f64 = 0.0;
    for (k, (y1, y0, fs, dk_pub, l_pub, ls_pub)) in rows.into_iter().enumerate() {
        let m = TwoMarginals::new(y1 / 100.0, y0 / 100.0, fs / 100.0, 0.0).map_err(err)?;
        let dk = 100.0 * dk_estimands(&m).map_err(err)?.dk_tilde;
        let l = 100.0 * theta_l(&m.to_outcome_only()).map_err(err)?;
        let ls = 100.0 * theta_l_star(&m).map_err(err)?;
        for (name, got, want) in [
            ("dk", dk, dk_pub),
            ("lower", l, l_pub),
            ("local", ls, ls_pub),
        ] {
            let d = (got - want).abs();
            worst = worst.max(d);
            ensure(d <= 0.1, || {
                format!("row {}: {name} {got:.3} vs {want}", k + 1)
            })?;
        }
        ensure(l <= ls + 1e-12 && ls <= dk + 1e-12, || {
            format!("row {}: ordering fails", k + 1)
        })?;
    }
    Ok(format!("6 rows x 3 columns, max deviation {worst:.3} pp"))
}

fn fundraising_suite() -> Check {
    // P(Y=1|Z=1), e(1), theta_L, theta_U, theta_local in percent.
    let rows = [
        (9.5, 37.6, 9.5, 71.9, 25.3),
        (5.2, 35.3, 5.2, 69.9, 14.8),
        (17.1, 37.7, 17.1, 79.4, 45.5),
        (12.6, 35.2, 12.6, 77.5, 35.9),
        (10.8, 36.3, 10.8, 74.5, 29.7),
        (7.1, 40.5, 7.1, 66.6, 17.5),
        (6.8, 36.4, 6.8, 70.4, 18.8),
        (5.4, 30.4, 5.4, 74.9, 17.7),
        (4.7, 43.0, 4.7, 61.7, 10.9),
        (5.1, 39.6, 5.1, 65.5, 12.9),
        (3.0, 34.4, 3.0, 68.6, 8.6),
    ];
    let mut worst: f64 = 0.0;
    for (k, (p, e1, lo, hi, local)) in rows.into_iter().enumerate() {
        let b = fundraising_bounds(p / 100.0, e1 / 100.0).map_err(err)?;
        for (name, got, want) in [
            ("lower", b.theta_l, lo),
            ("upper", b.theta_u, hi),
            ("local", b.theta_local, local),
        ] {
            let d = (100.0 * got - want).abs();
            worst = worst.max(d);
            ensure(d <= 0.15, || {
                format!("row {}: {name} {:.3} vs {want}", k + 1, 100.0 * got)
            })?;
        }
    }
    Ok(format!("11 rows x 3 columns, max deviation {worst:.3} pp"))
}

fn ci_suite() -> Check {
    let s = newspaper();
    let alpha = 0.2;
    let full = InferenceInput::new(&s, Scenario::FullJoint);
    let marg = InferenceInput::new(&s, Scenario::MarginalsWithExposure);
    let out = InferenceInput::new(&s, Scenario::OutcomeOnly);
    let it = ci_itt(&s, alpha).map_err(err)?;
    let cf = ci_theta(&full, alpha, 0.001).map_err(err)?;
    let cm = ci_theta(&marg, alpha, 0.001).map_err(err)?;
    let co = ci_theta(&out, alpha, 0.001).map_err(err)?;
    let cl = ci_theta_local(&full, alpha).map_err(err)?;
    ensure(cm.method == CiMethod::PretestCaseIi, || {
        format!("pretest chose {:?}", cm.method)
    })?;
    let rows = [
        ("ITT", it.lo, it.hi, 0.0036, 0.0959),
        ("full", cf.lo, cf.hi, 0.0289, 0.6610),
        ("marginals", cm.lo, cm.hi, 0.0286, 0.8143),
        ("outcome", co.lo, co.hi.min(1.0), 0.0288, 1.0),
        ("local", cl.lo, cl.hi.min(1.0), 0.1243, 1.0),
    ];
    let mut worst: f64 = 0.0;
    for (name, lo, hi, plo, phi) in rows {
        let d = (lo - plo).abs().max((hi - phi).abs());
        worst = worst.max(d);
        ensure(d <= 0.01, || {
            format!("{name}: [{lo:.4}, {hi:.4}] vs [{plo}, {phi}]")
        })?;
    }
    Ok(format!(
        "5 intervals, max endpoint deviation {worst:.4}; pretest case (ii)"
    ))
}

/// Joint law implied by random compliance shares and potential outcomes
/// with Y(0) <= Y(1).
fn random_joint(rng: &mut ChaCha8Rng) -> JointDist {
    loop {
        let w: Vec<f64> = (0..3).map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = w.iter().sum();
        let (sa, sc, sn) = (w[0] / total, w[1] / total, w[2] / total);
        let mut draw = || {
            let p0: f64 = rng.gen_range(0.0..0.6);
            (p0, p0 + (1.0 - p0) * rng.gen_range(0.0..1.0))
        };
        let ((_, a1), (c0, c1), (n0, _)) = (draw(), draw(), draw());
        let z1 = ArmCells {
            y1t1: sa * a1 + sc * c1,
            y1t0: sn * n0,
            y0t1: sa * (1.0 - a1) + sc * (1.0 - c1),
            y0t0: sn * (1.0 - n0),
        };
        let z0 = ArmCells {
            y1t1: sa * a1,
            y1t0: sc * c0 + sn * n0,
            y0t1: sa * (1.0 - a1),
            y0t0: sc * (1.0 - c0) + sn * (1.0 - n0),
        };
        let j = JointDist::new(z1, z0).unwrap();
        // Keep 1 - max P(Y(0)=1) away from zero so the grid stays small.
        if manski_potential_bounds(&j).b.hi <= 0.7 {
            return j;
        }
    }
}

fn sharpness_suite() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let joints: Vec<JointDist> = (0..1000).map(|_| random_joint(&mut rng)).collect();
    let reports: Vec<_> = joints
        .par_iter()
        .map(|j| sharpness_oracle(j, 0.001))
        .collect::<persuasion::Result<_>>()
        .map_err(err)?;
    let elapsed = start.elapsed();
    let mismatched = reports.iter().filter(|r| !r.extremes_match).count();
    let gaps = reports.iter().filter(|r| !r.gap_free).count();
    ensure(mismatched == 0 && gaps == 0, || {
        format!("{mismatched} extreme mismatches, {gaps} gaps")
    })?;
    ensure(elapsed < Duration::from_secs(60), || {
        format!("took {elapsed:?}")
    })?;
    let points: usize = reports.iter().map(|r| r.points).sum();
    Ok(format!(
        "1000 joints, {points} grid points, {:.1}s",
        elapsed.as_secs_f64()
    ))
}

fn coverage_suite() -> Check {
    let start = Instant::now();
    let mut lines = Vec::new();
    for (rho, seed) in [(0.0, 61), (0.4, 62), (0.8, 63)] {
        let cfg = binary_config(rho, seed);
        for alpha in [0.1, 0.2] {
            for method in [
                CoverageMethod::Stoye,
                CoverageMethod::OneSidedLower,
                CoverageMethod::LocalDelta,
            ] {
                let r = coverage_study(&cfg, 2_000, 2_000, alpha, method).map_err(err)?;
                let nominal = 1.0 - alpha;
                let ok = match method {
                    CoverageMethod::LocalDelta => (r.coverage - nominal).abs() <= 0.02,
                    _ => r.coverage >= nominal - 0.02,
                };
                ensure(ok, || {
                    format!(
                        "rho {rho}, alpha {alpha}, {method:?}: coverage {:.4}",
                        r.coverage
                    )
                })?;
                if method == CoverageMethod::LocalDelta {
                    lines.push(format!("{:.3}", r.coverage));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(600), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "3 configs x 2 levels x 3 methods; local coverage {}; {:.0}s",
        lines.join("/"),
        elapsed.as_secs_f64()
    ))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b
}

fn influence_suite() -> Check {
    let cfg = binary_config(0.0, 71);
    let n = 2_000;
    let targets = [
        ("lower", Target::ThetaL, Estimator::ThetaL),
        ("upper", Target::ThetaU, Estimator::ThetaU),
        ("local", Target::ThetaStar, Estimator::ThetaStar),
    ];
    let s = simulate(&cfg, n, 1).map_err(err)?;
    let mut notes = Vec::new();
    for (name, t, e) in targets {
        let a = influence_values(&s, t, None).map_err(err)?.se;
        let b = bootstrap_se(&s, e, 2_000, 2).map_err(err)?;
        ensure(rel(a, b) <= 0.10, || {
            format!("{name}: analytic {a:.5} vs bootstrap {b:.5}")
        })?;
        notes.push(format!("{name} boot {:.1}%", 100.0 * rel(a, b)));
    }
    let reps: Vec<[(f64, f64); 3]> = (0..1000u64)
        .into_par_iter()
        .map(|i| {
            let s = simulate(&cfg, n, 10_000 + i)?;
            let mut out = [(0.0, 0.0); 3];
            for (k, (_, t, _)) in targets.iter().enumerate() {
                let f = influence_values(&s, *t, None)?;
                out[k] = (f.estimate, f.se);
            }
            Ok(out)
        })
        .collect::<persuasion::Result<_>>()
        .map_err(err)?;
    for (k, (name, _, _)) in targets.iter().enumerate() {
        let est: Vec<f64> = reps.iter().map(|r| r[k].0).collect();
        let mean = est.iter().sum::<f64>() / est.len() as f64;
        let sd =
            (est.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (est.len() - 1) as f64).sqrt();
        let se = reps.iter().map(|r| r[k].1).sum::<f64>() / reps.len() as f64;
        ensure(rel(se, sd) <= 0.05, || {
            format!("{name}: mean se {se:.5} vs replication sd {sd:.5}")
        })?;
        notes.push(format!("{name} reps {:.1}%", 100.0 * rel(se, sd)));
    }
    Ok(notes.join(", "))
}

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

fn mte_suite() -> Check {
    let cfg = continuous_config(0.0);
    let truth = true_values(&cfg).map_err(err)?.theta;
    let s = simulate(&cfg, 100_000, 81).map_err(err)?;
    let grid: Vec<f64> = (10..=90).map(|i| i as f64 / 100.0).collect();
    let fit = theta_mte_curve(&s, &grid, Link::Probit, 2).map_err(err)?;
    let mut worst: f64 = 0.0;
    for (v, m) in grid.iter().zip(&fit.curve.values) {
        let m = m.ok_or_else(|| format!("undefined at {v}"))?;
        worst = worst.max((m - truth).abs());
    }
    ensure(worst <= 0.05, || format!("pointwise error {worst:.4}"))?;
    let avg = integrate_policy(&fit.curve, &PolicyWeight::Uniform)
        .map_err(err)?
        .value;
    ensure((avg - truth).abs() <= 0.02, || {
        format!("integral {avg:.4} vs {truth:.4}")
    })?;

    // Derivatives of P(Y=1|e) and P(Y=1,T=0|e) against central differences.
    let (t, u) = (&fit.treated_outcome, &fit.untreated_outcome);
    let p_y = |e: f64| e * fitted_value(t, e) + (1.0 - e) * fitted_value(u, e);
    let p_y_untreated = |e: f64| (1.0 - e) * fitted_value(u, e);
    let h = 1e-5;
    let mut fd: f64 = 0.0;
    for &e in &grid {
        let (d1, d0) = outcome_derivatives(t, u, e);
        fd = fd.max((d1 - (p_y(e + h) - p_y(e - h)) / (2.0 * h)).abs());
        fd = fd.max((d0 - (p_y_untreated(e + h) - p_y_untreated(e - h)) / (2.0 * h)).abs());
    }
    for link in [Link::Probit, Link::Logit] {
        for i in -40..=40 {
            let x = i as f64 / 10.0;
            let num = (link.cdf(x + h) - link.cdf(x - h)) / (2.0 * h);
            fd = fd.max((link.pdf(x) - num).abs());
        }
    }
    ensure(fd <= 1e-6, || format!("finite-difference gap {fd:.2e}"))?;

    let shifted: Vec<MicroRecord> = s
        .records
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.z = 3.0 * r.z - 7.0;
            r
        })
        .collect();
    let t2 = ingest_micro(shifted, s.mode, s.instrument).map_err(err)?;
    let mut affine: f64 = 0.0;
    for link in [Link::Probit, Link::Logit] {
        let a = theta_mte_curve(&s, &grid, link, 2).map_err(err)?.curve;
        let b = theta_mte_curve(&t2, &grid, link, 2).map_err(err)?.curve;
        for (x, y) in a.values.iter().zip(&b.values) {
            affine = affine.max((x.unwrap_or(f64::NAN) - y.unwrap_or(f64::NAN)).abs());
        }
    }
    ensure(affine <= 1e-8, || format!("affine gap {affine:.2e}"))?;
    Ok(format!(
        "max error {worst:.4}, integral error {:.4}, fd {fd:.1e}, affine {affine:.1e}",
        (avg - truth).abs()
    ))
}

fn contains(outer: (f64, f64), inner: (f64, f64)) -> bool {
    outer.0 <= inner.0 + 1e-12 && inner.1 <= outer.1 + 1e-12
}

fn multinomial_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(91);
    let (mut dominance, mut nesting, mut partition, mut lp_checked) = (0, 0, 0, 0);
    while dominance < 1000 {
        let pop = random_population(&mut rng, 6);
        let obs = observables(&pop);
        let m = obs.to_marginals();
        let mut me = m.clone();
        me.e1 = Some(obs.e1());
        me.e0 = Some(obs.e0());
        let full = mult_bounds(&MultScenarioData::FullJoint(obs));
        let marg = mult_bounds(&MultScenarioData::MarginalsWithExposure(me));
        let out = mult_bounds(&MultScenarioData::OutcomeOnly(m));
        let (Ok(full), Ok(marg), Ok(out)) = (full, marg, out) else {
            continue;
        };
        let bin =
            theta_l(&obs.collapse_binary().to_two_marginals().to_outcome_only()).map_err(err)?;
        ensure(full.lo >= bin - 1e-12, || {
            format!("dominance fails: {} < {bin}", full.lo)
        })?;
        dominance += 1;
        let iv = |r: &persuasion::multinomial::MultBoundsResult| (r.lo, r.hi);
        ensure(
            contains(iv(&marg), iv(&full)) && contains(iv(&out), iv(&marg)),
            || format!("nesting fails: {full:?} {marg:?} {out:?}"),
        )?;
        nesting += 1;
        for r in [&full, &marg, &out] {
            let shape_ok = match r.case {
                MultCase::DegenerateOne => r.lo == 1.0 && r.hi == 1.0,
                MultCase::TrivialUpper => r.hi == 1.0 && r.lo < 1.0,
                MultCase::Interior => r.hi < 1.0,
            };
            ensure(shape_ok, || format!("case does not match interval: {r:?}"))?;
        }
        partition += 1;
        if let Some((lo, hi)) = lp_range(&obs, Info::Joint) {
            // Exact upper-boundary ties are a null set skipped by the oracle.
            let bx = persuasion::multinomial::joint_boxes(&obs);
            if (bx.a.hi + bx.b.hi - 1.0).abs() > 1e-9 {
                ensure(
                    (full.lo - lo).abs() < 1e-7 && (full.hi - hi).abs() < 1e-7,
                    || format!("lp [{lo}, {hi}] vs {full:?}"),
                )?;
                ensure(
                    (hi < 1.0 - 1e-7) == (full.case == MultCase::Interior),
                    || format!("case {:?} vs lp upper {hi}", full.case),
                )?;
                lp_checked += 1;
            }
        }
    }
    ensure(lp_checked >= 500, || format!("only {lp_checked} lp checks"))?;
    Ok(format!(
        "dominance {dominance}, nesting {nesting}, partition {partition}, lp sharpness {lp_checked}"
    ))
}

fn mixture_cell(label: &str, share: f64, q0: f64, q1: f64, e0: f64, e1: f64) -> MixtureCell {
    MixtureCell {
        label: label.into(),
        share,
        config: DgpConfig {
            beliefs: vec![BeliefPoint { q0, q1, prob: 1.0 }],
            shock: ShockLaw::Exponential { rate: 1.0 },
            rho: 0.0,
            instrument: InstrumentLaw::Binary { e0, e1, p_z1: 0.5 },
            outside_share: None,
            seed: 0,
        },
    }
}

fn efficiency_suite() -> Check {
    // One cell reproduces the pooled estimators exactly.
    let s = newspaper();
    let one: Vec<MicroRecord> = s
        .records
        .iter()
        .map(|r| r.clone().with_cell("all"))
        .collect();
    let one = ingest_micro(one, s.mode, s.instrument).map_err(err)?;
    let cells = cell_conditional_estimates(&one, 10).map_err(err)?;
    let l = aggregate_theta_l(&one, &cells).map_err(err)?;
    let st = aggregate_theta_star(&one, &cells).map_err(err)?;
    let pl = theta_l(&tabulate_outcome(&s).map_err(err)?).map_err(err)?;
    let ps = theta_star(&tabulate_joint(&s).map_err(err)?).map_err(err)?;
    ensure(l.estimate == pl && st.estimate == ps, || {
        format!("single cell {} {} vs {pl} {ps}", l.estimate, st.estimate)
    })?;

    let mix = CellMixture {
        cells: vec![
            mixture_cell("a", 0.3, 0.2, 0.6, 0.1, 0.7),
            mixture_cell("b", 0.3, 0.4, 0.7, 0.2, 0.6),
            mixture_cell("c", 0.2, 0.1, 0.3, 0.3, 0.9),
            mixture_cell("d", 0.2, 0.5, 0.9, 0.1, 0.5),
        ],
    };
    let mut mean_infl: f64 = 0.0;
    let reps: Vec<[(f64, f64); 2]> = (0..1000u64)
        .into_par_iter()
        .map(|i| {
            let s = mix.simulate(8_000, 20_000 + i)?;
            let c = cell_conditional_estimates(&s, 10)?;
            let l = aggregate_theta_l(&s, &c)?;
            let st = aggregate_theta_star(&s, &c)?;
            let m = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            Ok([
                (l.estimate, l.se, m(&l.influence)),
                (st.estimate, st.se, m(&st.influence)),
            ])
        })
        .collect::<persuasion::Result<Vec<[(f64, f64, f64); 2]>>>()
        .map_err(err)?
        .into_iter()
        .map(|r| {
            mean_infl = mean_infl.max(r[0].2.abs()).max(r[1].2.abs());
            [(r[0].0, r[0].1), (r[1].0, r[1].1)]
        })
        .collect();
    ensure(mean_infl <= 1e-8, || {
        format!("influence mean {mean_infl:.2e}")
    })?;
    let mut notes = Vec::new();
    for (k, name) in ["lower", "local"].iter().enumerate() {
        let est: Vec<f64> = reps.iter().map(|r| r[k].0).collect();
        let mean = est.iter().sum::<f64>() / est.len() as f64;
        let sd =
            (est.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (est.len() - 1) as f64).sqrt();
        let se = reps.iter().map(|r| r[k].1).sum::<f64>() / reps.len() as f64;
        ensure(rel(se, sd) <= 0.05, || {
            format!("{name}: mean se {se:.5} vs replication sd {sd:.5}")
        })?;
        notes.push(format!("{name} {:.1}%", 100.0 * rel(se, sd)));
    }
    Ok(format!(
        "single cell exact, influence mean {mean_infl:.1e}, se vs sd {}",
        notes.join(", ")
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("golden values", golden_suite),
        ("turnout table", turnout_suite),
        ("fundraising tables", fundraising_suite),
        ("interval reproduction", ci_suite),
        ("sharpness oracle", sharpness_suite),
        ("coverage", coverage_suite),
        ("influence validation", influence_suite),
        ("marginal rates", mte_suite),
        ("multinomial", multinomial_suite),
        ("covariate efficiency", efficiency_suite),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1}s]", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{secs:.1}s]", k + 1);
            }
        }
    }
    println!("acceptance: {} of 10 passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
