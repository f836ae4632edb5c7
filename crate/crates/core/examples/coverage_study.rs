//! Monte Carlo coverage of the interval procedures under selection on gains.

use persuasion::sim::{
    coverage_study, BeliefPoint, CoverageMethod, DgpConfig, InstrumentLaw, ShockLaw,
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
        seed: 5,
    };
    println!(
        "{:<16} {:>6} {:>9} {:>7}",
        "method", "alpha", "coverage", "se"
    );
    for method in [
        CoverageMethod::Stoye,
        CoverageMethod::OneSidedLower,
        CoverageMethod::LocalDelta,
    ] {
        for alpha in [0.1, 0.2] {
            let r = coverage_study(&cfg, 2_000, 500, alpha, method)?;
            println!(
                "{:<16} {alpha:>6.2} {:>9.3} {:>7.3}",
                format!("{method:?}"),
                r.coverage,
                r.se
            );
        }
    }
    Ok(())
}
