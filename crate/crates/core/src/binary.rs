//! Binary-outcome estimands: the persuasion rate bounds for each data
//! scenario, the local persuasion rate, Wald-type ratios and the
//! simplified fundraising case.

use serde::{Deserialize, Serialize};

use crate::dist::{JointDist, OutcomeOnly, Scenario, ScenarioData, TwoMarginals};
use crate::error::{PersuasionError, Result};

/// Values this close to zero are treated as rounding noise when clamping.
const NOISE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimand {
    Theta,
    ThetaLocal,
    ThetaMult,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsResult {
    pub lo: f64,
    pub hi: f64,
    pub estimand: Estimand,
    pub scenario: Scenario,
    pub point_identified: bool,
}

impl BoundsResult {
    fn new(lo: f64, hi: f64, estimand: Estimand, scenario: Scenario) -> Self {
        BoundsResult {
            lo,
            hi,
            estimand,
            scenario,
            point_identified: lo == hi,
        }
    }

    pub fn interval(&self) -> Interval {
        Interval::new(self.lo, self.hi)
    }
}

/// Bounds on Pr{Y(1)=1} (the `a` box) and Pr{Y(0)=1} (the `b` box).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialBounds {
    pub a: Interval,
    pub b: Interval,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DkEstimands {
    pub wald: f64,
    /// Wald ratio rescaled by the untreated non-action share; not clamped.
    pub dk_tilde: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplierRates {
    pub treated: f64,
    pub untreated: f64,
    /// True when either rate falls outside [0, 1], which signals sampling
    /// noise or a failure of the no-defiers condition.
    pub out_of_range: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FundraisingBounds {
    pub theta_l: f64,
    pub theta_u: f64,
    pub theta_local: f64,
}

/// Lower bound (p1 - p0) / (1 - p0) on the persuasion rate.
///
/// Negative values are only clamped when they are rounding noise; a genuinely
/// negative value is returned so callers can flag the monotonicity violation.
pub fn theta_l(o: &OutcomeOnly) -> Result<f64> {
    let den = 1.0 - o.py1_z0;
    if den <= 0.0 {
        return Err(PersuasionError::DegenerateDenominator("theta_L"));
    }
    let v = (o.py1_z1 - o.py1_z0) / den;
    if v < 0.0 && v >= -NOISE {
        return Ok(0.0);
    }
    Ok(v)
}

/// True when the intent-to-treat effect is negative, i.e. the sample
/// contradicts monotone treatment response.
pub fn mtr_violated(o: &OutcomeOnly) -> bool {
    o.py1_z1 - o.py1_z0 < -NOISE
}

pub fn manski_potential_bounds(j: &JointDist) -> PotentialBounds {
    PotentialBounds {
        a: Interval::new(j.py1(1), j.p(1, 1, 1) + 1.0 - j.e1()),
        b: Interval::new(j.p(1, 0, 0), j.py1(0)),
    }
}

/// Extremes of (a - b) / (1 - b) over a box, subject to a >= b.
///
/// The objective increases in `a` and decreases in `b`, so the maximum sits at
/// (a_hi, b_lo). The minimum takes the smallest `a` and the largest feasible
/// `b`, which is b_hi unless a >= b binds.
pub fn fractional_extremes(a: Interval, b: Interval) -> Result<Interval> {
    let bad =
        |i: &Interval| !(0.0..=1.0).contains(&i.lo) || !(0.0..=1.0).contains(&i.hi) || i.lo > i.hi;
    if bad(&a) || bad(&b) {
        return Err(PersuasionError::InvalidProbabilities(
            "boxes must lie in [0, 1] with lo <= hi".into(),
        ));
    }
    if b.hi >= 1.0 {
        return Err(PersuasionError::DegenerateDenominator(
            "fractional program: b reaches 1",
        ));
    }
    if a.hi < b.lo {
        return Err(PersuasionError::InfeasibleBoxes);
    }
    let f = |x: f64, y: f64| (x - y) / (1.0 - y);
    let hi = f(a.hi, b.lo);
    let a_min = a.lo.max(b.lo);
    let b_at_min = b.hi.min(a_min);
    let lo = f(a_min, b_at_min);
    #[cfg(debug_assertions)]
    grid_check(a, b, lo, hi);
    Ok(Interval::new(lo, hi))
}

/// Evenly spaced point `i` of `steps` over an interval, exact at both ends.
pub fn grid_point(iv: Interval, i: usize, steps: usize) -> f64 {
    if i == steps {
        iv.hi
    } else {
        iv.lo + (iv.hi - iv.lo) * i as f64 / steps as f64
    }
}

#[cfg(debug_assertions)]
fn grid_check(a: Interval, b: Interval, lo: f64, hi: f64) {
    const STEPS: usize = 200;
    let f = |x: f64, y: f64| (x - y) / (1.0 - y);
    let mut gmin = f64::INFINITY;
    let mut gmax = f64::NEG_INFINITY;
    for i in 0..=STEPS {
        let x = grid_point(a, i, STEPS);
        for k in 0..=STEPS {
            let y = grid_point(b, k, STEPS);
            if x >= y {
                let v = f(x, y);
                gmin = gmin.min(v);
                gmax = gmax.max(v);
            }
        }
    }
    if gmax.is_finite() {
        debug_assert!(
            (gmax - hi).abs() <= 1e-9,
            "grid max {gmax} vs closed form {hi}"
        );
        debug_assert!(gmin >= lo - 1e-9, "grid min {gmin} below closed form {lo}");
        if a.lo >= b.hi {
            debug_assert!(
                (gmin - lo).abs() <= 1e-9,
                "grid min {gmin} vs closed form {lo}"
            );
        }
    }
}

/// Upper bound when the joint of (Y, T) given Z is known.
pub fn theta_u(j: &JointDist) -> Result<f64> {
    let pb = manski_potential_bounds(j);
    Ok(fractional_extremes(pb.a, pb.b)?.hi)
}

/// Upper bound when only outcome marginals and exposure rates are known.
pub fn theta_ue(m: &TwoMarginals) -> Result<f64> {
    let num_hi = (m.py1_z1 + 1.0 - m.e1).min(1.0);
    let b_lo = (m.py1_z0 - m.e0).max(0.0);
    let den = 1.0 - b_lo;
    if den <= 0.0 {
        return Err(PersuasionError::DegenerateDenominator("theta_Ue"));
    }
    Ok((num_hi - b_lo) / den)
}

pub fn theta_bounds(d: &ScenarioData) -> Result<BoundsResult> {
    let scenario = d.scenario();
    let lo = theta_l(&d.outcome_only())?;
    let out = match d {
        ScenarioData::SharpDesign(_) => BoundsResult::new(lo, lo, Estimand::Theta, scenario),
        ScenarioData::FullJoint(j) => {
            // The program's minimum equals theta_L whenever the sample respects
            // monotonicity; theta_L is reported directly so that a negative
            // intent-to-treat estimate stays visible.
            let pb = manski_potential_bounds(j);
            let ext = fractional_extremes(pb.a, pb.b)?;
            BoundsResult::new(lo, ext.hi, Estimand::Theta, scenario)
        }
        ScenarioData::MarginalsWithExposure(m) => {
            BoundsResult::new(lo, theta_ue(m)?, Estimand::Theta, scenario)
        }
        ScenarioData::OutcomeOnly(_) => BoundsResult::new(lo, 1.0, Estimand::Theta, scenario),
    };
    Ok(out)
}

pub fn complier_rates(j: &JointDist) -> Result<ComplierRates> {
    let share = j.e1() - j.e0();
    if share <= 0.0 {
        return Err(PersuasionError::NoCompliers);
    }
    let treated = (j.p(1, 1, 1) - j.p(1, 1, 0)) / share;
    let untreated = (j.p(1, 0, 0) - j.p(1, 0, 1)) / share;
    let out = |p: f64| !(0.0..=1.0).contains(&p);
    Ok(ComplierRates {
        treated,
        untreated,
        out_of_range: out(treated) || out(untreated),
    })
}

/// Local persuasion rate for compliers when the joint of (Y, T) given Z is known.
pub fn theta_star(j: &JointDist) -> Result<f64> {
    let den = j.p(0, 0, 0) - j.p(0, 0, 1);
    if den <= 0.0 {
        return Err(PersuasionError::DegenerateDenominator("theta_star"));
    }
    Ok((j.py1(1) - j.py1(0)) / den)
}

/// Lower bound on the local rate from marginals: (p1 - p0) / min{1 - p0, e1 - e0}.
pub fn theta_l_star(m: &TwoMarginals) -> Result<f64> {
    let share = m.e1 - m.e0;
    if share <= 0.0 {
        return Err(PersuasionError::NoCompliers);
    }
    let den = (1.0 - m.py1_z0).min(share);
    if den <= 0.0 {
        return Err(PersuasionError::DegenerateDenominator("theta_L_star"));
    }
    Ok((m.py1_z1 - m.py1_z0) / den)
}

pub fn theta_local_bounds(d: &ScenarioData) -> Result<BoundsResult> {
    let scenario = d.scenario();
    match d {
        ScenarioData::SharpDesign(j) | ScenarioData::FullJoint(j) => {
            let v = theta_star(j)?;
            Ok(BoundsResult::new(v, v, Estimand::ThetaLocal, scenario))
        }
        ScenarioData::MarginalsWithExposure(m) => Ok(BoundsResult::new(
            theta_l_star(m)?,
            1.0,
            Estimand::ThetaLocal,
            scenario,
        )),
        ScenarioData::OutcomeOnly(o) => Ok(BoundsResult::new(
            theta_l(o)?,
            1.0,
            Estimand::ThetaLocal,
            scenario,
        )),
    }
}

pub fn wald(m: &TwoMarginals) -> Result<f64> {
    let share = m.e1 - m.e0;
    if share == 0.0 {
        return Err(PersuasionError::DegenerateDenominator("Wald ratio"));
    }
    Ok((m.py1_z1 - m.py1_z0) / share)
}

pub fn dk_estimands(m: &TwoMarginals) -> Result<DkEstimands> {
    let w = wald(m)?;
    let den = 1.0 - m.py1_z0;
    if den <= 0.0 {
        return Err(PersuasionError::DegenerateDenominator("dk_tilde"));
    }
    Ok(DkEstimands {
        wald: w,
        dk_tilde: w / den,
    })
}

/// Designs where no one can take the action without treatment and the
/// control arm has no exposure.
pub fn fundraising_bounds(p1_given_z1: f64, e1: f64) -> Result<FundraisingBounds> {
    if !(0.0..=1.0).contains(&p1_given_z1) || !(0.0..=1.0).contains(&e1) {
        return Err(PersuasionError::InvalidProbabilities(
            "fundraising rates must lie in [0, 1]".into(),
        ));
    }
    if e1 == 0.0 {
        return Err(PersuasionError::ZeroExposure);
    }
    Ok(FundraisingBounds {
        theta_l: p1_given_z1,
        theta_u: p1_given_z1 + 1.0 - e1,
        theta_local: p1_given_z1 / e1,
    })
}

pub fn itt(o: &OutcomeOnly) -> f64 {
    o.py1_z1 - o.py1_z0
}
