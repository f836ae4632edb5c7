//! Averaging cell-level estimates over a discrete covariate, against the
//! pooled estimators that ignore it.

use persuasion::binary::{theta_l, theta_star};
use persuasion::dist::{tabulate_joint, tabulate_outcome};
use persuasion::efficiency::{aggregate_theta_l, aggregate_theta_star, cell_conditional_estimates};
use persuasion::inference::{influence_values, Target};
use persuasion::sim::{BeliefPoint, CellMixture, DgpConfig, InstrumentLaw, MixtureCell, ShockLaw};

fn cell(label: &str, share: f64, q0: f64, q1: f64, e0: f64, e1: f64) -> MixtureCell {
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

fn main() -> persuasion::Result<()> {
    let mix = CellMixture {
        cells: vec![
            cell("a", 0.3, 0.2, 0.6, 0.1, 0.7),
            cell("b", 0.3, 0.4, 0.7, 0.2, 0.6),
            cell("c", 0.2, 0.1, 0.3, 0.3, 0.9),
            cell("d", 0.2, 0.5, 0.9, 0.1, 0.5),
        ],
    };
    let sample = mix.simulate(8_000, 3)?;
    let truth = mix.truth()?;
    let cells = cell_conditional_estimates(&sample, 10)?;
    let l = aggregate_theta_l(&sample, &cells)?;
    let s = aggregate_theta_star(&sample, &cells)?;
    let pooled_l = influence_values(&sample, Target::ThetaL, None)?;
    let pooled_s = influence_values(&sample, Target::ThetaStar, None)?;

    println!("{:<12} {:>8} {:>8} {:>8}", "", "truth", "estimate", "se");
    println!(
        "{:<12} {:>8.4} {:>8.4} {:>8.4}",
        "lower, cells", truth.theta_l, l.estimate, l.se
    );
    println!(
        "{:<12} {:>8} {:>8.4} {:>8.4}",
        "lower, pool",
        "",
        theta_l(&tabulate_outcome(&sample)?)?,
        pooled_l.se
    );
    println!(
        "{:<12} {:>8.4} {:>8.4} {:>8.4}",
        "local, cells", truth.theta_star, s.estimate, s.se
    );
    println!(
        "{:<12} {:>8} {:>8.4} {:>8.4}",
        "local, pool",
        "",
        theta_star(&tabulate_joint(&sample)?)?,
        pooled_s.se
    );
    for w in &cells.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
