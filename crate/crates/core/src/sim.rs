//! Structural simulator: agents with beliefs q(0) <= q(1) and a utility
//! shock U act when -(1 - q) + q U >= 0, and take the treatment when their
//! selection rank V is below the exposure rate e(Z). A Gaussian copula links
//! V and U. Population parameters come from closed forms (one-dimensional
//! quadrature when the copula is not independence).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binary::{grid_point, manski_potential_bounds, theta_bounds, Interval};
use crate::dist::{
    ingest_micro, ArmCells, InstrumentKind, JointDist, MicroRecord, MicroSample, MultArm,
    MultJointDist, OutcomeMode, Scenario, ScenarioData, OTHER, OUTSIDE, TARGET,
};
use crate::error::{PersuasionError, Result};
use crate::inference::{ci_theta, ci_theta_local, InferenceInput};
use crate::numeric::{
    integrate, norm_cdf, norm_pdf, norm_quantile, norm_sf, replicate_rng, z_upper,
};

/// Normal scores beyond this carry no probability mass at double precision.
const SCORE_CLIP: f64 = 8.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeliefPoint {
    pub q0: f64,
    pub q1: f64,
    pub prob: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum ShockLaw {
    Exponential { rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InstrumentLaw {
    /// Z is Bernoulli(p_z1) and exposure is e0 or e1.
    Binary { e0: f64, e1: f64, p_z1: f64 },
    /// Z is standard normal and e(z) = Φ(a + b z).
    Continuous { a: f64, b: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpConfig {
    /// Discrete law of the belief pair (q(0), q(1)).
    pub beliefs: Vec<BeliefPoint>,
    pub shock: ShockLaw,
    /// Gaussian-copula correlation between V and U.
    #[serde(default)]
    pub rho: f64,
    pub instrument: InstrumentLaw,
    /// Share of non-acting agents whose fallback is the outside option
    /// rather than abstaining; set for multinomial outcomes.
    #[serde(default)]
    pub outside_share: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl DgpConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(PersuasionError::InvalidConfig(m.to_string()));
        if self.beliefs.is_empty() {
            return bad("belief law has no support points");
        }
        let total: f64 = self.beliefs.iter().map(|b| b.prob).sum();
        if (total - 1.0).abs() > 1e-9 {
            return bad("belief probabilities must sum to 1");
        }
        for b in &self.beliefs {
            if !(b.prob >= 0.0 && 0.0 <= b.q0 && b.q0 <= b.q1 && b.q1 <= 1.0) {
                return bad("beliefs need 0 <= q(0) <= q(1) <= 1 and nonnegative mass");
            }
        }
        let ShockLaw::Exponential { rate } = self.shock;
        if !(rate > 0.0 && rate.is_finite()) {
            return bad("shock rate must be positive");
        }
        if !(self.rho.abs() < 1.0) {
            return bad("copula correlation must lie in (-1, 1)");
        }
        match self.instrument {
            InstrumentLaw::Binary { e0, e1, p_z1 } => {
                if !(0.0 <= e0 && e0 <= e1 && e1 <= 1.0) {
                    return bad("exposure needs 0 <= e0 <= e1 <= 1");
                }
                if !(p_z1 > 0.0 && p_z1 < 1.0) {
                    return bad("instrument share must lie in (0, 1)");
                }
            }
            InstrumentLaw::Continuous { a, b } => {
                if !(a.is_finite() && b.is_finite() && b >= 0.0) {
                    return bad("exposure index needs finite a and b >= 0");
                }
            }
        }
        if let Some(s) = self.outside_share {
            if !(0.0..=1.0).contains(&s) {
                return bad("outside share must lie in [0, 1]");
            }
        }
        Ok(())
    }

    fn rate(&self) -> f64 {
        let ShockLaw::Exponential { rate } = self.shock;
        rate
    }

    /// Exposure rate at instrument value z.
    pub fn exposure(&self, z: f64) -> f64 {
        match self.instrument {
            InstrumentLaw::Binary { e0, e1, .. } => {
                if z == 1.0 {
                    e1
                } else {
                    e0
                }
            }
            InstrumentLaw::Continuous { a, b } => norm_cdf(a + b * z),
        }
    }

    /// Shock threshold above which an agent with belief q acts.
    fn threshold(q: f64) -> f64 {
        if q <= 0.0 {
            f64::INFINITY
        } else {
            (1.0 - q) / q
        }
    }

    /// Normal score g with P(U >= threshold(q)) = 1 - Φ(g).
    fn score(&self, q: f64) -> f64 {
        let c = Self::threshold(q);
        if c.is_infinite() {
            f64::INFINITY
        } else if c == 0.0 {
            f64::NEG_INFINITY
        } else {
            z_upper((-self.rate() * c).exp())
        }
    }
}

/// One structural draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Unit {
    pub y0: bool,
    pub y1: bool,
    pub u: f64,
    pub v: f64,
    pub z: f64,
    pub t: bool,
    /// Non-acting agents pick the outside option rather than abstain.
    pub outside: bool,
}

impl Unit {
    pub fn y(&self) -> bool {
        if self.t {
            self.y1
        } else {
            self.y0
        }
    }
}

fn draw_unit<R: Rng>(cfg: &DgpConfig, rng: &mut R) -> Unit {
    let mut r: f64 = rng.gen();
    let mut belief = cfg.beliefs[cfg.beliefs.len() - 1];
    for b in &cfg.beliefs {
        if r < b.prob {
            belief = *b;
            break;
        }
        r -= b.prob;
    }
    let e1: f64 = rng.sample(StandardNormal);
    let e2: f64 = rng.sample(StandardNormal);
    let wv = e1;
    let wu = cfg.rho * e1 + (1.0 - cfg.rho * cfg.rho).sqrt() * e2;
    let v = norm_cdf(wv);
    let u = -norm_sf(wu).ln() / cfg.rate();
    let acts = |q: f64| -(1.0 - q) + q * u >= 0.0;
    let z = match cfg.instrument {
        InstrumentLaw::Binary { p_z1, .. } => {
            if rng.gen_bool(p_z1) {
                1.0
            } else {
                0.0
            }
        }
        InstrumentLaw::Continuous { .. } => rng.sample(StandardNormal),
    };
    let outside = cfg.outside_share.map_or(false, |s| rng.gen_bool(s));
    Unit {
        y0: acts(belief.q0),
        y1: acts(belief.q1),
        u,
        v,
        z,
        t: v <= cfg.exposure(z),
        outside,
    }
}

pub fn simulate_units_with<R: Rng>(cfg: &DgpConfig, n: usize, rng: &mut R) -> Result<Vec<Unit>> {
    cfg.validate()?;
    Ok((0..n).map(|_| draw_unit(cfg, rng)).collect())
}

pub fn simulate_units(cfg: &DgpConfig, n: usize, seed: u64) -> Result<Vec<Unit>> {
    simulate_units_with(cfg, n, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn to_record(cfg: &DgpConfig, u: &Unit) -> MicroRecord {
    let y = if u.y() {
        TARGET
    } else if cfg.outside_share.is_none() {
        0
    } else if u.outside {
        OUTSIDE
    } else {
        OTHER
    };
    MicroRecord::new(y, Some(u.t as u8), u.z)
}

fn sample_kinds(cfg: &DgpConfig) -> (OutcomeMode, InstrumentKind) {
    let mode = if cfg.outside_share.is_some() {
        OutcomeMode::Multinomial
    } else {
        OutcomeMode::Binary
    };
    let inst = match cfg.instrument {
        InstrumentLaw::Binary { .. } => InstrumentKind::Binary,
        InstrumentLaw::Continuous { .. } => InstrumentKind::Continuous,
    };
    (mode, inst)
}

pub fn simulate_with<R: Rng>(cfg: &DgpConfig, n: usize, rng: &mut R) -> Result<MicroSample> {
    let units = simulate_units_with(cfg, n, rng)?;
    let rows = units.iter().map(|u| to_record(cfg, u)).collect();
    let (mode, inst) = sample_kinds(cfg);
    ingest_micro(rows, mode, inst)
}

/// Observed sample; identical for identical (cfg, n, seed).
pub fn simulate(cfg: &DgpConfig, n: usize, seed: u64) -> Result<MicroSample> {
    simulate_with(cfg, n, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// P(W_U >= g, V in (va, vb]) under the Gaussian copula.
fn band_mass(g: f64, rho: f64, va: f64, vb: f64) -> f64 {
    if vb <= va || g == f64::INFINITY {
        return 0.0;
    }
    if g == f64::NEG_INFINITY {
        return vb - va;
    }
    if rho == 0.0 {
        return (vb - va) * norm_sf(g);
    }
    let sa = norm_quantile(va).max(-SCORE_CLIP);
    let sb = norm_quantile(vb).min(SCORE_CLIP);
    let k = (1.0 - rho * rho).sqrt();
    integrate(|s| norm_pdf(s) * norm_sf((g - rho * s) / k), sa, sb, 1e-13)
}

/// P(W_U >= g | V = v).
fn act_given_rank(g: f64, rho: f64, v: f64) -> f64 {
    if g.is_infinite() {
        return if g > 0.0 { 0.0 } else { 1.0 };
    }
    let k = (1.0 - rho * rho).sqrt();
    norm_sf((g - rho * norm_quantile(v)) / k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum TruthMethod {
    ClosedForm,
    LargeN { n: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueParams {
    pub theta: f64,
    /// P(Y(1)=1) and P(Y(0)=1).
    pub p1: f64,
    pub p0: f64,
    /// Complier quantities, available with a binary instrument.
    pub theta_local: Option<f64>,
    pub theta_dk: Option<f64>,
    pub theta_dk_tilde: Option<f64>,
    pub e1: Option<f64>,
    pub e0: Option<f64>,
    pub mte_grid: Vec<f64>,
    pub mte: Vec<f64>,
    pub method: TruthMethod,
}

/// v = 0.01, ..., 0.99.
pub fn default_mte_grid() -> Vec<f64> {
    (1..=99).map(|i| i as f64 / 100.0).collect()
}

fn scores(cfg: &DgpConfig) -> Vec<(f64, f64, f64)> {
    cfg.beliefs
        .iter()
        .map(|b| (b.prob, cfg.score(b.q0), cfg.score(b.q1)))
        .collect()
}

/// Marginal persuasion rate at selection rank v.
pub fn true_mte(cfg: &DgpConfig, v: f64) -> Result<f64> {
    cfg.validate()?;
    let (mut num, mut den) = (0.0, 0.0);
    for (p, g0, g1) in scores(cfg) {
        let a0 = act_given_rank(g0, cfg.rho, v);
        let a1 = act_given_rank(g1, cfg.rho, v);
        num += p * (a1 - a0);
        den += p * (1.0 - a0);
    }
    Ok(num / den)
}

/// P(Y(0)=0 | V = v), the weight that turns the marginal rate into theta.
pub fn true_untreated_nonaction(cfg: &DgpConfig, v: f64) -> f64 {
    scores(cfg)
        .iter()
        .map(|&(p, g0, _)| p * (1.0 - act_given_rank(g0, cfg.rho, v)))
        .sum()
}

pub fn true_values(cfg: &DgpConfig) -> Result<TrueParams> {
    cfg.validate()?;
    let sc = scores(cfg);
    let p1: f64 = sc.iter().map(|&(p, _, g1)| p * norm_sf(g1)).sum();
    let p0: f64 = sc.iter().map(|&(p, g0, _)| p * norm_sf(g0)).sum();
    let theta = (p1 - p0) / (1.0 - p0);
    let grid = default_mte_grid();
    let mte = grid
        .iter()
        .map(|&v| true_mte(cfg, v))
        .collect::<Result<Vec<_>>>()?;
    let mut out = TrueParams {
        theta,
        p1,
        p0,
        theta_local: None,
        theta_dk: None,
        theta_dk_tilde: None,
        e1: None,
        e0: None,
        mte_grid: grid,
        mte,
        method: TruthMethod::ClosedForm,
    };
    if let InstrumentLaw::Binary { e0, e1, .. } = cfg.instrument {
        let band = |g: f64| band_mass(g, cfg.rho, e0, e1);
        let a1: f64 = sc.iter().map(|&(p, _, g1)| p * band(g1)).sum();
        let a0: f64 = sc.iter().map(|&(p, g0, _)| p * band(g0)).sum();
        let share = e1 - e0;
        let j = population_joint(cfg)?;
        let (py1, py0) = (j.py1(1), j.py1(0));
        if share > 0.0 {
            out.theta_local = Some((a1 - a0) / (share - a0));
            out.theta_dk = Some((a1 - a0) / (share * (1.0 - p0)));
            out.theta_dk_tilde = Some((py1 - py0) / share / (1.0 - py0));
        }
        out.e1 = Some(e1);
        out.e0 = Some(e0);
    }
    Ok(out)
}

/// Parameters recomputed from simulated potential outcomes, as a check on
/// the closed forms.
pub fn large_n_values(cfg: &DgpConfig, n: usize, seed: u64) -> Result<TrueParams> {
    let units = simulate_units(cfg, n, seed)?;
    let nf = n as f64;
    let p1 = units.iter().filter(|u| u.y1).count() as f64 / nf;
    let p0 = units.iter().filter(|u| u.y0).count() as f64 / nf;
    let mut out = TrueParams {
        theta: (p1 - p0) / (1.0 - p0),
        p1,
        p0,
        theta_local: None,
        theta_dk: None,
        theta_dk_tilde: None,
        e1: None,
        e0: None,
        mte_grid: Vec::new(),
        mte: Vec::new(),
        method: TruthMethod::LargeN { n, seed },
    };
    if let InstrumentLaw::Binary { e0, e1, .. } = cfg.instrument {
        let compliers: Vec<&Unit> = units.iter().filter(|u| u.v > e0 && u.v <= e1).collect();
        let moved = compliers.iter().filter(|u| u.y1 && !u.y0).count() as f64;
        let room = compliers.iter().filter(|u| !u.y0).count() as f64;
        out.theta_local = Some(moved / room);
        out.theta_dk = Some(moved / compliers.len() as f64 / (1.0 - p0));
        out.e1 = Some(e1);
        out.e0 = Some(e0);
    }
    Ok(out)
}

/// Population cell probabilities of (Y, T) given Z for a binary instrument.
pub fn population_joint(cfg: &DgpConfig) -> Result<JointDist> {
    cfg.validate()?;
    let InstrumentLaw::Binary { e0, e1, .. } = cfg.instrument else {
        return Err(PersuasionError::Unsupported(
            "population cells need a binary instrument".into(),
        ));
    };
    let sc = scores(cfg);
    let arm = |e: f64| {
        let y1t1: f64 = sc
            .iter()
            .map(|&(p, _, g1)| p * band_mass(g1, cfg.rho, 0.0, e))
            .sum();
        let y1t0: f64 = sc
            .iter()
            .map(|&(p, g0, _)| p * band_mass(g0, cfg.rho, e, 1.0))
            .sum();
        ArmCells {
            y1t1,
            y1t0,
            y0t1: (e - y1t1).max(0.0),
            y0t0: (1.0 - e - y1t0).max(0.0),
        }
    };
    JointDist::new(arm(e1), arm(e0))
}

/// Population multinomial cells; non-acting agents split by the outside share.
pub fn population_mult_joint(cfg: &DgpConfig) -> Result<MultJointDist> {
    let s = cfg.outside_share.ok_or_else(|| {
        PersuasionError::InvalidConfig("multinomial cells need an outside share".into())
    })?;
    let j = population_joint(cfg)?;
    let arm = |a: &ArmCells| MultArm {
        target: [a.y1t0, a.y1t1],
        outside: [s * a.y0t0, s * a.y0t1],
        other: [(1.0 - s) * a.y0t0, (1.0 - s) * a.y0t1],
    };
    MultJointDist::new(arm(&j.z1), arm(&j.z0))
}

/// Population projections of the implied joint onto every data scenario.
pub fn scenario_projections(cfg: &DgpConfig) -> Result<Vec<ScenarioData>> {
    let j = population_joint(cfg)?;
    Ok(vec![
        ScenarioData::FullJoint(j),
        ScenarioData::MarginalsWithExposure(j.to_two_marginals()),
        ScenarioData::OutcomeOnly(j.to_outcome_only()),
    ])
}

/// A covariate taking finitely many values, each with its own structural law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureCell {
    pub label: String,
    pub share: f64,
    pub config: DgpConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellMixture {
    pub cells: Vec<MixtureCell>,
}

/// Population values of the covariate-averaged lower bound and the
/// complier-weighted local rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureTruth {
    pub theta_l: f64,
    pub theta_star: f64,
}

impl CellMixture {
    pub fn validate(&self) -> Result<()> {
        let total: f64 = self.cells.iter().map(|c| c.share).sum();
        if self.cells.is_empty() || (total - 1.0).abs() > 1e-9 {
            return Err(PersuasionError::InvalidConfig(
                "cell shares must sum to 1".into(),
            ));
        }
        for c in &self.cells {
            c.config.validate()?;
            if !matches!(c.config.instrument, InstrumentLaw::Binary { .. }) {
                return Err(PersuasionError::InvalidConfig(
                    "cell mixtures need a binary instrument".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn simulate_with<R: Rng>(&self, n: usize, rng: &mut R) -> Result<MicroSample> {
        self.validate()?;
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let mut r: f64 = rng.gen();
            let mut cell = &self.cells[self.cells.len() - 1];
            for c in &self.cells {
                if r < c.share {
                    cell = c;
                    break;
                }
                r -= c.share;
            }
            let u = draw_unit(&cell.config, rng);
            rows.push(to_record(&cell.config, &u).with_cell(cell.label.clone()));
        }
        ingest_micro(rows, OutcomeMode::Binary, InstrumentKind::Binary)
    }

    pub fn simulate(&self, n: usize, seed: u64) -> Result<MicroSample> {
        self.simulate_with(n, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn truth(&self) -> Result<MixtureTruth> {
        self.validate()?;
        let (mut l, mut num, mut den) = (0.0, 0.0, 0.0);
        for c in &self.cells {
            let j = population_joint(&c.config)?;
            let o = j.to_outcome_only();
            l += c.share * (o.py1_z1 - o.py1_z0) / (1.0 - o.py1_z0);
            let share = j.e1() - j.e0();
            let star = (j.py1(1) - j.py1(0)) / (j.p(0, 0, 0) - j.p(0, 0, 1));
            num += c.share * share * star;
            den += c.share * share;
        }
        Ok(MixtureTruth {
            theta_l: l,
            theta_star: num / den,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharpnessReport {
    /// Extremes over the grid of (a, b) with a >= b.
    pub grid: Interval,
    pub bounds: Interval,
    pub extremes_match: bool,
    /// Every bin of width `resolution` across the grid range holds an
    /// attained value.
    pub gap_free: bool,
    pub points: usize,
}

/// Brute-force check of the full-joint bounds: evaluate (a - b) / (1 - b)
/// over a grid of the potential-outcome boxes. Grid steps are small enough
/// that neighbouring points never differ by more than `resolution`.
pub fn sharpness_oracle(j: &JointDist, resolution: f64) -> Result<SharpnessReport> {
    let pb = manski_potential_bounds(j);
    let bounds = theta_bounds(&ScenarioData::FullJoint(*j))?.interval();
    let room = 1.0 - pb.b.hi;
    if room <= 0.0 {
        return Err(PersuasionError::DegenerateDenominator("sharpness oracle"));
    }
    let steps = |iv: Interval, step: f64| {
        let w = iv.hi - iv.lo;
        if w <= 0.0 {
            0
        } else {
            (w / step).ceil() as usize
        }
    };
    let na = steps(pb.a, 0.5 * resolution * room);
    let nb = steps(pb.b, 0.5 * resolution * room * room);
    let f = |x: f64, y: f64| (x - y) / (1.0 - y);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut values = Vec::with_capacity((na + 1) * (nb + 1));
    for k in 0..=nb {
        let y = grid_point(pb.b, k, nb);
        for i in 0..=na {
            let x = grid_point(pb.a, i, na);
            if x >= y {
                let v = f(x, y);
                lo = lo.min(v);
                hi = hi.max(v);
                values.push(v);
            }
        }
    }
    if values.is_empty() {
        return Err(PersuasionError::InfeasibleBoxes);
    }
    let bins = ((hi - lo) / resolution).ceil().max(1.0) as usize;
    let mut hit = vec![false; bins];
    for v in &values {
        let b = (((v - lo) / resolution) as usize).min(bins - 1);
        hit[b] = true;
    }
    let grid = Interval::new(lo, hi);
    Ok(SharpnessReport {
        grid,
        bounds,
        extremes_match: (lo - bounds.lo).abs() <= 1e-9 && (hi - bounds.hi).abs() <= 1e-9,
        gap_free: hit.iter().all(|h| *h),
        points: values.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverageMethod {
    /// Two-sided interval for theta from the full joint.
    Stoye,
    /// One-sided interval [theta_L - z sigma, 1] from outcomes alone.
    OneSidedLower,
    /// Delta-method interval around theta* for the complier rate.
    LocalDelta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub method: CoverageMethod,
    pub alpha: f64,
    pub truth: f64,
    pub coverage: f64,
    /// Binomial standard error of the coverage estimate.
    pub se: f64,
    pub reps: usize,
    pub failed: usize,
}

/// Repeated simulate, estimate and cover. Replicate i draws from stream i of
/// the master seed, so the report does not depend on the thread count.
pub fn coverage_study(
    cfg: &DgpConfig,
    n: usize,
    reps: usize,
    alpha: f64,
    method: CoverageMethod,
) -> Result<CoverageReport> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(PersuasionError::InvalidAlpha(alpha));
    }
    if reps < 500 {
        return Err(PersuasionError::InvalidConfig(format!(
            "coverage studies need at least 500 replicates, got {reps}"
        )));
    }
    let truth = true_values(cfg)?;
    let target = match method {
        CoverageMethod::Stoye | CoverageMethod::OneSidedLower => truth.theta,
        CoverageMethod::LocalDelta => truth.theta_local.ok_or_else(|| {
            PersuasionError::InvalidConfig("complier rate needs a binary instrument".into())
        })?,
    };
    let outcomes: Vec<Option<bool>> = (0..reps)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_rng(cfg.seed, i as u64);
            let s = simulate_with(cfg, n, &mut rng).ok()?;
            let ci = match method {
                CoverageMethod::Stoye => ci_theta(
                    &InferenceInput::new(&s, Scenario::FullJoint),
                    alpha,
                    alpha / 10.0,
                ),
                CoverageMethod::OneSidedLower => {
                    let s = s.drop_treatment();
                    ci_theta(
                        &InferenceInput::new(&s, Scenario::OutcomeOnly),
                        alpha,
                        alpha / 10.0,
                    )
                }
                CoverageMethod::LocalDelta => {
                    ci_theta_local(&InferenceInput::new(&s, Scenario::FullJoint), alpha)
                }
            };
            ci.ok().map(|ci| ci.contains(target))
        })
        .collect();
    let ok: Vec<bool> = outcomes.into_iter().flatten().collect();
    let failed = reps - ok.len();
    if failed as f64 > 0.05 * reps as f64 {
        return Err(PersuasionError::EstimatorFailedInReplicates {
            failed,
            total: reps,
        });
    }
    let cov = ok.iter().filter(|c| **c).count() as f64 / ok.len() as f64;
    Ok(CoverageReport {
        method,
        alpha,
        truth: target,
        coverage: cov,
        se: (cov * (1.0 - cov) / ok.len() as f64).sqrt(),
        reps,
        failed,
    })
}
