//! Lower bounds next to the rescaled Wald ratio for six turnout studies,
//! from published outcome shares and first-stage differences (percent).

use persuasion::binary::{dk_estimands, theta_l, theta_l_star};
use persuasion::dist::TwoMarginals;

const STUDIES: [(&str, f64, f64, f64); 6] = [
    ("canvassing, one city", 47.2, 44.8, 27.9),
    ("canvassing, six cities", 31.0, 28.6, 29.3),
    ("phone calls, youth group", 71.1, 66.0, 73.7),
    ("phone calls, ages 18-30", 41.6, 40.5, 41.4),
    ("television (abstention)", 45.5, 43.5, 80.0),
    ("newspaper subscription", 70.0, 69.0, 25.0),
];

fn main() -> persuasion::Result<()> {
    println!("{:<26} {:>7} {:>7} {:>7}", "study", "dk", "lower", "local");
    for (name, y1, y0, first_stage) in STUDIES {
        // Only the difference in exposure enters these formulas.
        let m = TwoMarginals::new(y1 / 100.0, y0 / 100.0, first_stage / 100.0, 0.0)?;
        let dk = dk_estimands(&m)?.dk_tilde;
        let lo = theta_l(&m.to_outcome_only())?;
        let local = theta_l_star(&m)?;
        println!(
            "{name:<26} {:>7.1} {:>7.1} {:>7.1}",
            100.0 * dk,
            100.0 * lo,
            100.0 * local
        );
    }
    Ok(())
}
