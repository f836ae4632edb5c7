//! Door-to-door fundraising: nobody gives without a visit and the control
//! arm is never visited, so bounds need only the giving and answer rates.

use persuasion::binary::fundraising_bounds;

const TREATMENTS: [(&str, f64, f64); 5] = [
    ("voluntary contribution", 9.5, 37.6),
    ("with seed money", 5.2, 35.3),
    ("single-prize lottery", 17.1, 37.7),
    ("multiple-prize lottery", 12.6, 35.2),
    ("pooled", 10.8, 36.3),
];

fn main() -> persuasion::Result<()> {
    println!(
        "{:<24} {:>7} {:>7} {:>7}",
        "treatment", "lower", "upper", "local"
    );
    for (name, give, answer) in TREATMENTS {
        let b = fundraising_bounds(give / 100.0, answer / 100.0)?;
        println!(
            "{name:<24} {:>7.1} {:>7.1} {:>7.1}",
            100.0 * b.theta_l,
            100.0 * b.theta_u,
            100.0 * b.theta_local
        );
    }
    Ok(())
}
