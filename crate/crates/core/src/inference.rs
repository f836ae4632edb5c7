//! Standard errors and confidence intervals.
//!
//! Every estimator here is a smooth function of within-arm weighted means of
//! a few record-level indicators, so its influence function follows from the
//! gradient of that function. The lower and upper persuasion bounds also have
//! explicit influence expressions, evaluated directly.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binary::{
    fractional_extremes, itt, theta_l, theta_star, theta_u, theta_ue, wald, Interval,
};
use crate::dist::{
    tabulate_joint, tabulate_outcome, InstrumentKind, MicroSample, Scenario, TwoMarginals,
};
use crate::error::{PersuasionError, Result};
use crate::numeric::{bisect, norm_cdf, replicate_rng, z_upper};

/// Quantity whose sampling variability is being described.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    #[serde(rename = "theta_L")]
    ThetaL,
    #[serde(rename = "theta_U")]
    ThetaU,
    #[serde(rename = "theta_star")]
    ThetaStar,
    #[serde(rename = "wald")]
    Wald,
    /// P(Y=1|Z=1) + 1 - e(1)
    #[serde(rename = "xi1")]
    Xi1,
    /// P(Y=1|Z=0) - e(0)
    #[serde(rename = "xi2")]
    Xi2,
    #[serde(rename = "itt")]
    Itt,
    #[serde(rename = "p1")]
    OutcomeZ1,
    #[serde(rename = "p0")]
    OutcomeZ0,
}

impl Target {
    fn needs_treatment(self) -> bool {
        matches!(
            self,
            Target::ThetaU | Target::ThetaStar | Target::Wald | Target::Xi1 | Target::Xi2
        )
    }
}

/// Exposure rates supplied from outside the sample; treated as known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnownExposure {
    pub e1: f64,
    pub e0: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InfluenceSeries {
    pub target: Target,
    pub estimate: f64,
    pub values: Vec<f64>,
    /// sqrt(sum of squared values) / n
    pub se: f64,
}

impl InfluenceSeries {
    fn new(target: Target, estimate: f64, values: Vec<f64>) -> Self {
        let n = values.len() as f64;
        let se = values.iter().map(|v| v * v).sum::<f64>().sqrt() / n;
        InfluenceSeries {
            target,
            estimate,
            values,
            se,
        }
    }
}

// Record-level indicators whose within-arm means drive every estimator.
const Y: usize = 0;
const YT: usize = 1;
const T: usize = 2;
const Y_T0: usize = 3;
const NY_T0: usize = 4;
const K: usize = 5;

fn features(y: f64, t: f64) -> [f64; K] {
    [y, y * t, t, y * (1.0 - t), (1.0 - y) * (1.0 - t)]
}

type Means = [[f64; K]; 2];

struct ArmMeans {
    mean: Means,
    wsum: [f64; 2],
    /// Exposure means were replaced by known values.
    fixed_exposure: bool,
}

fn arm_means(sample: &MicroSample, exposure: Option<KnownExposure>) -> Result<ArmMeans> {
    if sample.instrument != InstrumentKind::Binary {
        return Err(PersuasionError::Unsupported(
            "inference needs a binary instrument".into(),
        ));
    }
    if sample.is_empty() {
        return Err(PersuasionError::EmptyInput);
    }
    let mut acc = [[0.0; K]; 2];
    let mut wsum = [0.0; 2];
    for r in &sample.records {
        let z = r.arm() as usize;
        let f = features(r.target(), r.treated());
        for k in 0..K {
            acc[z][k] += r.w * f[k];
        }
        wsum[z] += r.w;
    }
    for z in [1u8, 0] {
        if wsum[z as usize] <= 0.0 {
            return Err(PersuasionError::EmptyArm(z));
        }
    }
    let mut mean = [[0.0; K]; 2];
    for z in 0..2 {
        for k in 0..K {
            mean[z][k] = acc[z][k] / wsum[z];
        }
    }
    if let Some(e) = exposure {
        mean[1][T] = e.e1;
        mean[0][T] = e.e0;
    }
    Ok(ArmMeans {
        mean,
        wsum,
        fixed_exposure: exposure.is_some(),
    })
}

fn nonzero(den: f64, what: &'static str) -> Result<f64> {
    if den == 0.0 || !den.is_finite() {
        return Err(PersuasionError::DegenerateDenominator(what));
    }
    Ok(den)
}

/// Value of the target and its gradient with respect to the arm means.
fn value_grad(target: Target, m: &Means) -> Result<(f64, Means)> {
    let mut g = [[0.0; K]; 2];
    let (p1, p0) = (m[1][Y], m[0][Y]);
    let v = match target {
        Target::ThetaL => {
            let d = nonzero(1.0 - p0, "theta_L")?;
            let v = (p1 - p0) / d;
            g[1][Y] = 1.0 / d;
            g[0][Y] = (v - 1.0) / d;
            v
        }
        Target::ThetaU => {
            let d = nonzero(1.0 - m[0][Y_T0], "theta_U")?;
            let v = (m[1][YT] - m[0][Y_T0] + 1.0 - m[1][T]) / d;
            g[1][YT] = 1.0 / d;
            g[1][T] = -1.0 / d;
            g[0][Y_T0] = (v - 1.0) / d;
            v
        }
        Target::ThetaStar => {
            let d = nonzero(m[0][NY_T0] - m[1][NY_T0], "theta_star")?;
            let v = (p1 - p0) / d;
            g[1][Y] = 1.0 / d;
            g[0][Y] = -1.0 / d;
            g[0][NY_T0] = -v / d;
            g[1][NY_T0] = v / d;
            v
        }
        Target::Wald => {
            let d = nonzero(m[1][T] - m[0][T], "wald")?;
            let v = (p1 - p0) / d;
            g[1][Y] = 1.0 / d;
            g[0][Y] = -1.0 / d;
            g[1][T] = -v / d;
            g[0][T] = v / d;
            v
        }
        Target::Xi1 => {
            g[1][Y] = 1.0;
            g[1][T] = -1.0;
            p1 + 1.0 - m[1][T]
        }
        Target::Xi2 => {
            g[0][Y] = 1.0;
            g[0][T] = -1.0;
            p0 - m[0][T]
        }
        Target::Itt => {
            g[1][Y] = 1.0;
            g[0][Y] = -1.0;
            p1 - p0
        }
        Target::OutcomeZ1 => {
            g[1][Y] = 1.0;
            p1
        }
        Target::OutcomeZ0 => {
            g[0][Y] = 1.0;
            p0
        }
    };
    Ok((v, g))
}

fn check_target(
    sample: &MicroSample,
    target: Target,
    exposure: Option<KnownExposure>,
) -> Result<()> {
    let fixed_ok = exposure.is_some() && matches!(target, Target::Xi1 | Target::Xi2 | Target::Wald);
    if target.needs_treatment() && !sample.has_treatment && !fixed_ok {
        return Err(PersuasionError::MissingTreatment);
    }
    Ok(())
}

/// Influence values from the gradient of a smooth function of arm means.
pub fn delta_influence(
    sample: &MicroSample,
    target: Target,
    exposure: Option<KnownExposure>,
) -> Result<InfluenceSeries> {
    check_target(sample, target, exposure)?;
    let am = arm_means(sample, exposure)?;
    let (v, mut g) = value_grad(target, &am.mean)?;
    if am.fixed_exposure {
        g[1][T] = 0.0;
        g[0][T] = 0.0;
    }
    let n = sample.len() as f64;
    let values = sample
        .records
        .iter()
        .map(|r| {
            let z = r.arm() as usize;
            let f = features(r.target(), r.treated());
            let dot: f64 = (0..K).map(|k| g[z][k] * (f[k] - am.mean[z][k])).sum();
            n * r.w * dot / am.wsum[z]
        })
        .collect();
    Ok(InfluenceSeries::new(target, v, values))
}

/// Shares of the whole (weighted) sample used by the explicit expressions.
struct Shares {
    pz1: f64,
    pz0: f64,
    wbar: f64,
}

fn shares(sample: &MicroSample) -> Shares {
    let total: f64 = sample.records.iter().map(|r| r.w).sum();
    let w1: f64 = sample
        .records
        .iter()
        .filter(|r| r.arm() == 1)
        .map(|r| r.w)
        .sum();
    Shares {
        pz1: w1 / total,
        pz0: 1.0 - w1 / total,
        wbar: total / sample.len() as f64,
    }
}

fn weighted_share(sample: &MicroSample, f: impl Fn(f64, f64, u8) -> f64) -> f64 {
    let total: f64 = sample.records.iter().map(|r| r.w).sum();
    sample
        .records
        .iter()
        .map(|r| r.w * f(r.target(), r.treated(), r.arm()))
        .sum::<f64>()
        / total
}

fn ind(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Influence of the lower bound, term by term from its explicit expression.
/// Each record is scaled by its relative weight w_i / mean(w).
fn phi_lower(sample: &MicroSample) -> Result<InfluenceSeries> {
    let s = shares(sample);
    let q1 = weighted_share(sample, |y, _, z| y * ind(z == 1));
    let q0 = weighted_share(sample, |y, _, z| y * ind(z == 0));
    let (p1, p0) = (q1 / s.pz1, q0 / s.pz0);
    // Both leading factors read 1 - P(Y=1|Z=0), the denominator of the bound.
    let d = nonzero(1.0 - p0, "theta_L")?;
    let th = (p1 - p0) / d;
    let values = sample
        .records
        .iter()
        .map(|r| {
            let (y, z1, z0) = (r.target(), ind(r.arm() == 1), ind(r.arm() == 0));
            let v = (y * z1 - q1) / (d * s.pz1) - p1 / (d * s.pz1) * (z1 - s.pz1)
                + (th - 1.0) / (d * s.pz0) * (y * z0 - q0)
                - (th - 1.0) * p0 / (d * s.pz0) * (z0 - s.pz0);
            v * r.w / s.wbar
        })
        .collect();
    Ok(InfluenceSeries::new(Target::ThetaL, th, values))
}

/// Influence of the upper bound when (Y, T, Z) is observed jointly. The
/// arm-size term carries the conditional share P(Y=1,T=1|Z=1) + P(T=0|Z=1),
/// mirroring the lower-bound expression.
fn phi_upper(sample: &MicroSample) -> Result<InfluenceSeries> {
    let s = shares(sample);
    let q11 = weighted_share(sample, |y, t, z| y * t * ind(z == 1));
    let r01 = weighted_share(sample, |_, t, z| (1.0 - t) * ind(z == 1));
    let q10 = weighted_share(sample, |y, t, z| y * (1.0 - t) * ind(z == 0));
    let c0 = q10 / s.pz0;
    let d = nonzero(1.0 - c0, "theta_U")?;
    let th = ((q11 + r01) / s.pz1 - c0) / d;
    let values = sample
        .records
        .iter()
        .map(|r| {
            let (y, t) = (r.target(), r.treated());
            let (z1, z0) = (ind(r.arm() == 1), ind(r.arm() == 0));
            let v = (y * t * z1 - q11 + (1.0 - t) * z1 - r01) / (d * s.pz1)
                - (q11 + r01) / s.pz1 / (d * s.pz1) * (z1 - s.pz1)
                + (th - 1.0) / (d * s.pz0) * (y * (1.0 - t) * z0 - q10)
                - (th - 1.0) * c0 / (d * s.pz0) * (z0 - s.pz0);
            v * r.w / s.wbar
        })
        .collect();
    Ok(InfluenceSeries::new(Target::ThetaU, th, values))
}

/// Influence values and standard error for one target.
pub fn influence_values(
    sample: &MicroSample,
    target: Target,
    exposure: Option<KnownExposure>,
) -> Result<InfluenceSeries> {
    check_target(sample, target, exposure)?;
    arm_means(sample, None)?;
    match target {
        Target::ThetaL => phi_lower(sample),
        Target::ThetaU => phi_upper(sample),
        _ => delta_influence(sample, target, exposure),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    Stoye,
    PretestCaseI,
    PretestCaseIi,
    PretestCaseIiiProjection,
    DeltaTwoSided,
    BonferroniIntersection,
    OneSided,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CiDiagnostics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi2: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lo: f64,
    pub hi: f64,
    /// Nominal coverage 1 - alpha.
    pub level: f64,
    pub method: CiMethod,
    pub diagnostics: CiDiagnostics,
}

impl ConfidenceInterval {
    fn new(lo: f64, hi: f64, alpha: f64, method: CiMethod) -> Self {
        ConfidenceInterval {
            lo,
            hi,
            level: 1.0 - alpha,
            method,
            diagnostics: CiDiagnostics::default(),
        }
    }

    pub fn interval(&self) -> Interval {
        Interval::new(self.lo, self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(PersuasionError::InvalidAlpha(alpha));
    }
    Ok(())
}

/// Critical value c solving Φ(c + r) - Φ(-c) = 1 - alpha, where r is the
/// estimated interval length over the larger standard error.
pub fn stoye_critical_value(r: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    bisect(
        |c| norm_cdf(c + r) - norm_cdf(-c) - (1.0 - alpha),
        0.0,
        10.0,
        1e-12,
    )
}

/// Interval covering a partially identified parameter with probability
/// 1 - alpha, uniformly in the length of the identified set.
pub fn stoye_interval(
    theta_lo: f64,
    theta_hi: f64,
    sigma_lo: f64,
    sigma_hi: f64,
    alpha: f64,
) -> Result<ConfidenceInterval> {
    if !(sigma_lo > 0.0 && sigma_hi > 0.0) {
        return Err(PersuasionError::NonpositiveSigma(sigma_lo, sigma_hi));
    }
    let mut notes = Vec::new();
    let (lo, hi) = if theta_lo > theta_hi {
        let mid = 0.5 * (theta_lo + theta_hi);
        notes.push(format!(
            "estimated lower bound {theta_lo} exceeds upper bound {theta_hi}; both set to the midpoint"
        ));
        (mid, mid)
    } else {
        (theta_lo, theta_hi)
    };
    let c = stoye_critical_value((hi - lo) / sigma_lo.max(sigma_hi), alpha)?;
    let mut ci =
        ConfidenceInterval::new(lo - c * sigma_lo, hi + c * sigma_hi, alpha, CiMethod::Stoye);
    ci.diagnostics.c_alpha = Some(c);
    ci.diagnostics.notes = notes;
    Ok(ci)
}

/// Where the sample comes from and what else is known about it.
#[derive(Debug, Clone, Copy)]
pub struct InferenceInput<'a> {
    pub sample: &'a MicroSample,
    pub scenario: Scenario,
    /// Externally supplied exposure rates, used when T is not in the sample.
    pub exposure: Option<KnownExposure>,
}

impl<'a> InferenceInput<'a> {
    pub fn new(sample: &'a MicroSample, scenario: Scenario) -> Self {
        InferenceInput {
            sample,
            scenario,
            exposure: None,
        }
    }

    pub fn with_exposure(mut self, e1: f64, e0: f64) -> Self {
        self.exposure = Some(KnownExposure { e1, e0 });
        self
    }

    fn series(&self, target: Target) -> Result<InfluenceSeries> {
        let exposure = if self.sample.has_treatment {
            None
        } else {
            self.exposure
        };
        influence_values(self.sample, target, exposure)
    }
}

fn one_sided_lower(input: &InferenceInput, alpha: f64) -> Result<ConfidenceInterval> {
    let l = input.series(Target::ThetaL)?;
    Ok(ConfidenceInterval::new(
        l.estimate - z_upper(alpha) * l.se,
        1.0,
        alpha,
        CiMethod::OneSided,
    ))
}

/// Confidence interval for the persuasion rate.
pub fn ci_theta(input: &InferenceInput, alpha: f64, alpha_bar: f64) -> Result<ConfidenceInterval> {
    check_alpha(alpha)?;
    match input.scenario {
        Scenario::SharpDesign | Scenario::FullJoint => {
            let l = input.series(Target::ThetaL)?;
            let u = input.series(Target::ThetaU)?;
            stoye_interval(l.estimate, u.estimate, l.se, u.se, alpha)
        }
        Scenario::MarginalsWithExposure => pretest_interval(input, alpha, alpha_bar),
        Scenario::OutcomeOnly => one_sided_lower(input, alpha),
    }
}

fn pretest_interval(
    input: &InferenceInput,
    alpha: f64,
    alpha_bar: f64,
) -> Result<ConfidenceInterval> {
    if !(alpha_bar > 0.0 && alpha_bar < alpha) {
        return Err(PersuasionError::InvalidAlpha(alpha_bar));
    }
    let l = input.series(Target::ThetaL)?;
    let x1 = input.series(Target::Xi1)?;
    let x2 = input.series(Target::Xi2)?;
    let zbar = z_upper(alpha_bar / 4.0);
    let level = alpha - alpha_bar;
    let mut ci = if x1.estimate - zbar * x1.se >= 1.0 {
        ConfidenceInterval::new(
            l.estimate - z_upper(level) * l.se,
            1.0,
            alpha,
            CiMethod::PretestCaseI,
        )
    } else if x1.estimate + zbar * x1.se <= 1.0 && x2.estimate + zbar * x2.se <= 0.0 {
        // The upper bound reduces to xi1 here.
        let mut ci = stoye_interval(l.estimate, x1.estimate, l.se, x1.se, level)?;
        ci.method = CiMethod::PretestCaseIi;
        ci.level = 1.0 - alpha;
        ci
    } else {
        projection_interval(input, &x1, &x2, level, alpha)?
    };
    ci.diagnostics.xi1 = Some(x1.estimate);
    ci.diagnostics.xi2 = Some(x2.estimate);
    Ok(ci)
}

/// Confidence boxes for the two potential-outcome shares, then the exact
/// extremes of (a - b) / (1 - b) over them. Each of the four box edges gets
/// a quarter of the level.
fn projection_interval(
    input: &InferenceInput,
    x1: &InfluenceSeries,
    x2: &InfluenceSeries,
    level: f64,
    alpha: f64,
) -> Result<ConfidenceInterval> {
    let p1 = input.series(Target::OutcomeZ1)?;
    let p0 = input.series(Target::OutcomeZ0)?;
    let z = z_upper(level / 4.0);
    let clip = |v: f64| v.clamp(0.0, 1.0);
    let a = Interval::new(clip(p1.estimate - z * p1.se), clip(x1.estimate + z * x1.se));
    // b = 1 makes the ratio undefined; the supremum is approached from below.
    let b = Interval::new(
        clip(x2.estimate - z * x2.se),
        clip(p0.estimate + z * p0.se).min(1.0 - 1e-9),
    );
    let b = Interval::new(b.lo.min(b.hi), b.hi);
    let ext = fractional_extremes(a, b)?;
    Ok(ConfidenceInterval::new(
        ext.lo,
        ext.hi,
        alpha,
        CiMethod::PretestCaseIiiProjection,
    ))
}

/// Confidence interval for the persuasion rate among compliers.
pub fn ci_theta_local(input: &InferenceInput, alpha: f64) -> Result<ConfidenceInterval> {
    check_alpha(alpha)?;
    let z2 = z_upper(alpha / 2.0);
    match input.scenario {
        Scenario::SharpDesign | Scenario::FullJoint => {
            let s = input.series(Target::ThetaStar)?;
            Ok(ConfidenceInterval::new(
                s.estimate - z2 * s.se,
                s.estimate + z2 * s.se,
                alpha,
                CiMethod::DeltaTwoSided,
            ))
        }
        Scenario::MarginalsWithExposure => {
            let w = input.series(Target::Wald)?;
            let l = input.series(Target::ThetaL)?;
            let lo = (w.estimate - z2 * w.se)
                .max(l.estimate - z2 * l.se)
                .max(0.0);
            Ok(ConfidenceInterval::new(
                lo,
                1.0,
                alpha,
                CiMethod::BonferroniIntersection,
            ))
        }
        Scenario::OutcomeOnly => one_sided_lower(input, alpha),
    }
}

/// Two-sided interval for the intent-to-treat effect p1 - p0.
pub fn ci_itt(sample: &MicroSample, alpha: f64) -> Result<ConfidenceInterval> {
    check_alpha(alpha)?;
    let s = influence_values(sample, Target::Itt, None)?;
    let z2 = z_upper(alpha / 2.0);
    Ok(ConfidenceInterval::new(
        s.estimate - z2 * s.se,
        s.estimate + z2 * s.se,
        alpha,
        CiMethod::DeltaTwoSided,
    ))
}

/// Point estimators available to the bootstrap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    ThetaL,
    ThetaU,
    ThetaUe,
    ThetaStar,
    Wald,
    Itt,
}

impl Estimator {
    pub fn evaluate(self, sample: &MicroSample) -> Result<f64> {
        match self {
            Estimator::ThetaL => theta_l(&tabulate_outcome(sample)?),
            Estimator::Itt => Ok(itt(&tabulate_outcome(sample)?)),
            Estimator::ThetaU => theta_u(&tabulate_joint(sample)?),
            Estimator::ThetaStar => theta_star(&tabulate_joint(sample)?),
            Estimator::ThetaUe => theta_ue(&marginals(sample)?),
            Estimator::Wald => wald(&marginals(sample)?),
        }
    }
}

fn marginals(sample: &MicroSample) -> Result<TwoMarginals> {
    Ok(tabulate_joint(sample)?.to_two_marginals())
}

/// Nonparametric bootstrap standard error with one random stream per
/// replicate, so the result is independent of thread scheduling.
pub fn bootstrap_se(
    sample: &MicroSample,
    estimator: Estimator,
    b: usize,
    seed: u64,
) -> Result<f64> {
    if b < 100 {
        return Err(PersuasionError::InvalidConfig(format!(
            "bootstrap needs at least 100 replicates, got {b}"
        )));
    }
    let n = sample.len();
    if n == 0 {
        return Err(PersuasionError::EmptyInput);
    }
    let draws: Vec<Option<f64>> = (0..b)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_rng(seed, i as u64);
            let idx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            estimator
                .evaluate(&sample.subsample(&idx))
                .ok()
                .filter(|v| v.is_finite())
        })
        .collect();
    let ok: Vec<f64> = draws.into_iter().flatten().collect();
    let failed = b - ok.len();
    if failed as f64 > 0.05 * b as f64 || ok.len() < 2 {
        return Err(PersuasionError::EstimatorFailedInReplicates { failed, total: b });
    }
    let m = ok.iter().sum::<f64>() / ok.len() as f64;
    let var = ok.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (ok.len() - 1) as f64;
    Ok(var.sqrt())
}
