//! Bounds when non-acting agents split between an outside option and a
//! rival choice, under the three information sets.

use persuasion::binary::theta_l;
use persuasion::dist::{MultArm, MultJointDist, MultScenarioData};
use persuasion::multinomial::{mult_bounds, theta_l_mult};

fn main() -> persuasion::Result<()> {
    // Cell probabilities indexed by treatment status.
    let z1 = MultArm {
        target: [0.02, 0.30],
        outside: [0.03, 0.35],
        other: [0.03, 0.27],
    };
    let z0 = MultArm {
        target: [0.15, 0.05],
        outside: [0.40, 0.05],
        other: [0.30, 0.05],
    };
    let joint = MultJointDist::new(z1, z0)?;
    let mut marginals = joint.to_marginals();
    let outcome_only = MultScenarioData::OutcomeOnly(marginals.clone());
    marginals.e1 = Some(joint.e1());
    marginals.e0 = Some(joint.e0());

    println!(
        "binary lower bound        {:.4}",
        theta_l(&joint.collapse_binary().to_two_marginals().to_outcome_only())?
    );
    println!("multinomial lower bound   {:.4}", theta_l_mult(&joint)?);
    for (name, data) in [
        ("full joint", MultScenarioData::FullJoint(joint)),
        (
            "marginals + exposure",
            MultScenarioData::MarginalsWithExposure(marginals),
        ),
        ("outcomes only", outcome_only),
    ] {
        let r = mult_bounds(&data)?;
        println!("{name:<22} [{:.4}, {:.4}] {:?}", r.lo, r.hi, r.case);
    }
    Ok(())
}
