//! Bounds and point estimates for a newspaper-subscription experiment under
//! each information set, from arm-by-treatment counts.

use persuasion::binary::{dk_estimands, itt, theta_bounds, theta_local_bounds};
use persuasion::dist::{expand_counts, ingest_micro, tabulate_joint, InstrumentKind, OutcomeMode};
use persuasion::dist::{ScenarioData, TwoMarginals};

fn main() -> persuasion::Result<()> {
    // (y, t, z, count)
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
    let joint = tabulate_joint(&sample)?;
    let m: TwoMarginals = joint.to_two_marginals();

    println!("n = {}", sample.len());
    println!("intent to treat      {:.4}", itt(&m.to_outcome_only()));
    let dk = dk_estimands(&m)?;
    println!("wald ratio           {:.4}", dk.wald);
    println!("rescaled wald        {:.4}", dk.dk_tilde);
    println!();
    println!("{:<22} {:>16} {:>16}", "information", "theta", "local rate");
    let scenarios = [
        ("full joint", ScenarioData::FullJoint(joint)),
        (
            "marginals + exposure",
            ScenarioData::MarginalsWithExposure(m),
        ),
        (
            "outcomes only",
            ScenarioData::OutcomeOnly(m.to_outcome_only()),
        ),
    ];
    for (name, data) in scenarios {
        let b = theta_bounds(&data)?;
        let l = theta_local_bounds(&data)?;
        println!(
            "{name:<22} [{:.4}, {:.4}] [{:.4}, {:.4}]",
            b.lo, b.hi, l.lo, l.hi
        );
    }
    Ok(())
}
