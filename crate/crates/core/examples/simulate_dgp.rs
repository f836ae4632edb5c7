//! Structural simulation: population values, a large sample, and a brute
//! force check that the full-joint bounds are sharp.

use persuasion::binary::theta_bounds;
use persuasion::dist::{tabulate_joint, ScenarioData};
use persuasion::sim::{
    population_joint, sharpness_oracle, simulate, true_values, BeliefPoint, DgpConfig,
    InstrumentLaw, ShockLaw,
};

fn main() -> persuasion::Result<()> {
    let cfg = DgpConfig {
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
        rho: 0.4,
        instrument: InstrumentLaw::Binary {
            e0: 0.2,
            e1: 0.6,
            p_z1: 0.5,
        },
        outside_share: None,
        seed: 0,
    };
    let truth = true_values(&cfg)?;
    println!("population rate      {:.4}", truth.theta);
    println!(
        "complier rate        {:.4}",
        truth.theta_local.unwrap_or(f64::NAN)
    );

    let pop = population_joint(&cfg)?;
    let b = theta_bounds(&ScenarioData::FullJoint(pop))?;
    println!("population bounds    [{:.4}, {:.4}]", b.lo, b.hi);

    let sample = simulate(&cfg, 200_000, 9)?;
    let est = theta_bounds(&ScenarioData::FullJoint(tabulate_joint(&sample)?))?;
    println!("sample bounds        [{:.4}, {:.4}]", est.lo, est.hi);

    let r = sharpness_oracle(&pop, 0.001)?;
    println!(
        "grid range           [{:.4}, {:.4}] over {} points; extremes match: {}, gap free: {}",
        r.grid.lo, r.grid.hi, r.points, r.extremes_match, r.gap_free
    );
    Ok(())
}
