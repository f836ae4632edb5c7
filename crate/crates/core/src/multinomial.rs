//! Bounds on the persuasion rate among agents who would not pick the outside
//! option when untreated.
//!
//! With a = P(Y_target(1) = 1), b = P(Y_outside(0) = 1) and
//! c = P(Y_target(0) = 1) the estimand is (a - c) / (1 - b - c). Each data
//! scenario pins a, b and c into boxes (with a joint cap on b + c), and the
//! ratio is monotone in each coordinate, so the extremes sit on box corners.

use serde::{Deserialize, Serialize};

use crate::binary::{theta_l, Interval};
use crate::dist::{MultJointDist, MultMarginals, MultScenarioData, OutcomeOnly, Scenario};
use crate::error::{PersuasionError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultCase {
    /// Too few untreated non-abstainers remain: the rate is exactly one.
    DegenerateOne,
    /// Lower bound is informative, upper bound is one.
    TrivialUpper,
    /// Both bounds are interior.
    Interior,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultBoundsResult {
    pub lo: f64,
    pub hi: f64,
    pub case: MultCase,
    pub scenario: Scenario,
}

impl MultBoundsResult {
    pub fn interval(&self) -> Interval {
        Interval::new(self.lo, self.hi)
    }
}

/// Case conditions within rounding of a tie go to the earlier case.
const TIE: f64 = 1e-12;

/// Ranges of the three marginal probabilities entering the ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultBoxes {
    /// P(Y_target(1) = 1)
    pub a: Interval,
    /// P(Y_outside(0) = 1)
    pub b: Interval,
    /// P(Y_target(0) = 1)
    pub c: Interval,
}

/// Range of P(A and B) given only P(A) and P(B).
pub fn frechet_interval(pa: f64, pb: f64) -> Interval {
    Interval::new((pa + pb - 1.0).max(0.0), pa.min(pb))
}

/// Sharp lower bound when (Y, T, Z) is observed jointly.
pub fn theta_l_mult(j: &MultJointDist) -> Result<f64> {
    let bx = joint_boxes(j);
    if bx.a.lo + bx.b.lo >= 1.0 - TIE {
        return Err(PersuasionError::DegenerateCase(
            "target share plus untreated abstainers reaches one",
        ));
    }
    ratio(bx.a.lo - bx.c.hi, 1.0 - bx.b.lo - bx.c.hi, "theta_L_mult")
}

pub fn joint_boxes(j: &MultJointDist) -> MultBoxes {
    let (z1, z0) = (&j.z1, &j.z0);
    let (e1, e0) = (j.e1(), j.e0());
    MultBoxes {
        a: Interval::new(z1.target[0] + z1.target[1], z1.target[1] + 1.0 - e1),
        b: Interval::new(z0.outside[0], z0.outside[0] + e0),
        c: Interval::new(z0.target[0], z0.target[0] + z0.target[1]),
    }
}

/// Boxes from outcome marginals plus exposure rates. The untreated cells are
/// replaced by their Fréchet ranges.
pub fn marginal_boxes(m: &MultMarginals, e1: f64, e0: f64) -> MultBoxes {
    let [t1, _, _] = m.z1;
    let [t0, out0, _] = m.z0;
    MultBoxes {
        a: Interval::new(t1, t1.min(e1) + 1.0 - e1),
        b: Interval::new((out0 - e0).max(0.0), out0.min(1.0 - e0) + e0),
        c: Interval::new((t0 - e0).max(0.0), t0),
    }
}

fn ratio(num: f64, den: f64, what: &'static str) -> Result<f64> {
    if den <= 0.0 {
        return Err(PersuasionError::DegenerateDenominator(what));
    }
    Ok(num / den)
}

/// Case split shared by the two scenarios with exposure information. The
/// lower bound is supplied by the caller since the marginal scenario takes a
/// maximum over two ratios.
fn three_case(
    bx: &MultBoxes,
    lower: impl FnOnce() -> Result<f64>,
    scenario: Scenario,
) -> Result<MultBoundsResult> {
    // Clamp rounding residue from the ratios into the unit interval.
    let done = |lo: f64, hi: f64, case| {
        let lo = lo.clamp(0.0, 1.0);
        let hi = hi.clamp(0.0, 1.0);
        Ok(MultBoundsResult {
            lo,
            hi: if hi < lo && lo - hi <= TIE { lo } else { hi },
            case,
            scenario,
        })
    };
    if bx.a.lo + bx.b.lo >= 1.0 - TIE {
        return done(1.0, 1.0, MultCase::DegenerateOne);
    }
    let lo = lower()?;
    if bx.a.hi + bx.b.hi >= 1.0 - TIE {
        return done(lo, 1.0, MultCase::TrivialUpper);
    }
    let hi = ratio(
        bx.a.hi - bx.c.lo,
        1.0 - bx.b.hi - bx.c.lo,
        "theta_mult upper bound",
    )?;
    done(lo, hi, MultCase::Interior)
}

pub fn mult_bounds(d: &MultScenarioData) -> Result<MultBoundsResult> {
    match d {
        MultScenarioData::FullJoint(j) => {
            let bx = joint_boxes(j);
            three_case(
                &bx,
                || ratio(bx.a.lo - bx.c.hi, 1.0 - bx.b.lo - bx.c.hi, "theta_L_mult"),
                Scenario::FullJoint,
            )
        }
        MultScenarioData::MarginalsWithExposure(m) => {
            m.validate()?;
            let (Some(e1), Some(e0)) = (m.e1, m.e0) else {
                return Err(PersuasionError::InconsistentScenario(
                    "exposure rates required for this scenario".into(),
                ));
            };
            let bx = marginal_boxes(m, e1, e0);
            let (t1, t0, out0) = (m.z1[0], m.z0[0], m.z0[1]);
            three_case(
                &bx,
                || {
                    let first = ratio(t1 - t0, 1.0 - t0, "theta_L")?;
                    let second = ratio(t1 - t0, 1.0 - out0 + e0 - t0, "theta_L_mult")?;
                    Ok(first.max(second))
                },
                Scenario::MarginalsWithExposure,
            )
        }
        MultScenarioData::OutcomeOnly(m) => {
            m.validate()?;
            let lo = theta_l(&OutcomeOnly::new(m.z1[0], m.z0[0])?)?;
            let (lo, case) = if lo >= 1.0 - TIE {
                (1.0, MultCase::DegenerateOne)
            } else {
                (lo, MultCase::TrivialUpper)
            };
            Ok(MultBoundsResult {
                lo,
                hi: 1.0,
                case,
                scenario: Scenario::OutcomeOnly,
            })
        }
    }
}
