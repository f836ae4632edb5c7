//! Confidence intervals at the 80% level for the newspaper experiment, with
//! analytic and bootstrap standard errors.

use persuasion::dist::{expand_counts, ingest_micro, InstrumentKind, OutcomeMode, Scenario};
use persuasion::inference::{
    bootstrap_se, ci_itt, ci_theta, ci_theta_local, influence_values, Estimator, InferenceInput,
    Target,
};

fn main() -> persuasion::Result<()> {
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
    let sample = ingest_micro(rows, OutcomeMode::Binary, InstrumentKind::Binary)?;
    let (alpha, alpha_bar) = (0.2, 0.001);

    let it = ci_itt(&sample, alpha)?;
    println!("intent to treat        [{:.4}, {:.4}]", it.lo, it.hi);
    for (name, scenario) in [
        ("theta, full joint", Scenario::FullJoint),
        ("theta, marginals", Scenario::MarginalsWithExposure),
        ("theta, outcomes only", Scenario::OutcomeOnly),
    ] {
        let input = InferenceInput::new(&sample, scenario);
        let ci = ci_theta(&input, alpha, alpha_bar)?;
        println!("{name:<22} [{:.4}, {:.4}] {:?}", ci.lo, ci.hi, ci.method);
    }
    let local = ci_theta_local(&InferenceInput::new(&sample, Scenario::FullJoint), alpha)?;
    println!(
        "local rate             [{:.4}, {:.4}] (upper end clipped at 1)",
        local.lo,
        local.hi.min(1.0)
    );

    println!();
    println!("{:<10} {:>9} {:>9}", "", "analytic", "bootstrap");
    for (name, target, est) in [
        ("lower", Target::ThetaL, Estimator::ThetaL),
        ("upper", Target::ThetaU, Estimator::ThetaU),
        ("itt", Target::Itt, Estimator::Itt),
    ] {
        let a = influence_values(&sample, target, None)?.se;
        let b = bootstrap_se(&sample, est, 2_000, 42)?;
        println!("{name:<10} {a:>9.4} {b:>9.4}");
    }
    Ok(())
}
