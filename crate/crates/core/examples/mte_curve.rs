//! Marginal persuasion rates along the selection margin from a continuous
//! instrument, compared with the simulator's exact curve.

use persuasion::mte::{integrate_policy, theta_mte_curve, Link, PolicyWeight};
use persuasion::sim::{
    simulate, true_mte, true_values, BeliefPoint, DgpConfig, InstrumentLaw, ShockLaw,
};

fn main() -> persuasion::Result<()> {
    let cfg = DgpConfig {
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
        rho: -0.3,
        instrument: InstrumentLaw::Continuous { a: 0.0, b: 1.5 },
        outside_share: None,
        seed: 0,
    };
    let sample = simulate(&cfg, 100_000, 1)?;
    let grid: Vec<f64> = (2..=8).map(|i| i as f64 / 10.0).collect();
    let fit = theta_mte_curve(&sample, &grid, Link::Probit, 2)?;

    println!("{:>5} {:>9} {:>9}", "v", "estimate", "exact");
    for (v, m) in grid.iter().zip(&fit.curve.values) {
        let m = m.map_or("-".to_string(), |m| format!("{m:.4}"));
        println!("{v:>5.2} {m:>9} {:>9.4}", true_mte(&cfg, *v)?);
    }
    let full = theta_mte_curve(&sample, &[], Link::Probit, 2)?;
    let avg = integrate_policy(&full.curve, &PolicyWeight::UntreatedOutcome)?;
    println!();
    println!(
        "outcome-weighted average {:.4} over {:.0}% of [0, 1]; population rate {:.4}",
        avg.value,
        100.0 * avg.coverage,
        true_values(&cfg)?.theta
    );
    Ok(())
}
