//! Marginal persuasion rate along the selection margin, from a continuous
//! instrument with (Y, T, Z) jointly observed. Two steps: an index model for
//! the exposure rate e(z), then index models for the treated and untreated
//! outcome equations m1(e) = P(Y=1 | T=1, e) and m0(e) = P(Y=1 | T=0, e).
//! Since P(T=1 | e) = e, these give P(Y=1 | e) = e m1 + (1 - e) m0 and
//! P(Y=1, T=0 | e) = (1 - e) m0, and the marginal rate at v is
//! [dP(Y=1|e)/de] / [1 + dP(Y=1,T=0|e)/de] evaluated at e = v.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::binary::Interval;
use crate::dist::MicroSample;
use crate::error::{PersuasionError, Result};
use crate::numeric::{norm_cdf, norm_pdf, norm_sf, trapezoid};

const MAX_ITER: usize = 100;
const GRAD_TOL: f64 = 1e-8;
/// Coefficient norm beyond which the likelihood is taken to diverge.
const SEPARATION_NORM: f64 = 1e4;
/// Denominators at or below this leave the grid point undefined.
pub const DENOM_CUTOFF: f64 = 1e-6;
pub const MIN_DISTINCT_Z: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    Probit,
    Logit,
    /// Linear probability model, fit by least squares.
    Identity,
}

impl Link {
    pub fn cdf(self, x: f64) -> f64 {
        match self {
            Link::Probit => norm_cdf(x),
            Link::Logit => 1.0 / (1.0 + (-x).exp()),
            Link::Identity => x,
        }
    }

    /// 1 - cdf, computed without cancellation in the upper tail.
    fn sf(self, x: f64) -> f64 {
        match self {
            Link::Probit => norm_sf(x),
            Link::Logit => 1.0 / (1.0 + x.exp()),
            Link::Identity => 1.0 - x,
        }
    }

    /// Derivative of the link.
    pub fn pdf(self, x: f64) -> f64 {
        match self {
            Link::Probit => norm_pdf(x),
            Link::Logit => {
                let p = self.cdf(x);
                p * (1.0 - p)
            }
            Link::Identity => 1.0,
        }
    }

    fn inverse(self, p: f64) -> f64 {
        match self {
            Link::Probit => crate::numeric::norm_quantile(p),
            Link::Logit => (p / (1.0 - p)).ln(),
            Link::Identity => p,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexModelFit {
    pub link: Link,
    /// Intercept first, then one slope per regressor.
    pub coef: Vec<f64>,
    /// Standard errors from the inverse information.
    pub se: Vec<f64>,
    pub iterations: usize,
    /// Norm of the mean score at the solution.
    pub grad_norm: f64,
}

impl IndexModelFit {
    pub fn index(&self, x: &[f64]) -> f64 {
        self.coef[0]
            + self.coef[1..]
                .iter()
                .zip(x)
                .map(|(b, v)| b * v)
                .sum::<f64>()
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.link.cdf(self.index(x))
    }
}

fn design_row(x: &[f64]) -> DVector<f64> {
    let mut r = DVector::zeros(x.len() + 1);
    r[0] = 1.0;
    for (k, v) in x.iter().enumerate() {
        r[k + 1] = *v;
    }
    r
}

fn distinct_rows(x: &[Vec<f64>]) -> usize {
    let mut rows: Vec<&Vec<f64>> = x.iter().collect();
    rows.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    rows.dedup();
    rows.len()
}

/// Per-observation log-likelihood, score weight and information weight.
fn obs_terms(link: Link, y: f64, eta: f64) -> (f64, f64, f64) {
    let (p, q) = (link.cdf(eta).max(1e-300), link.sf(eta).max(1e-300));
    let f = link.pdf(eta);
    let ll = y * p.ln() + (1.0 - y) * q.ln();
    let score = (y - p) * f / (p * q);
    let info = f * f / (p * q);
    (ll, score, info)
}

/// Unweighted binary regression.
pub fn fit_index_model(
    responses: &[f64],
    regressors: &[Vec<f64>],
    link: Link,
) -> Result<IndexModelFit> {
    let w = vec![1.0; responses.len()];
    fit_weighted_index_model(responses, regressors, &w, link)
}

/// Weighted maximum likelihood by damped Fisher scoring (Newton for the
/// logistic link); least squares for the identity link.
pub fn fit_weighted_index_model(
    responses: &[f64],
    regressors: &[Vec<f64>],
    weights: &[f64],
    link: Link,
) -> Result<IndexModelFit> {
    let n = responses.len();
    if n == 0 {
        return Err(PersuasionError::EmptyInput);
    }
    if regressors.len() != n || weights.len() != n {
        return Err(PersuasionError::InvalidProbabilities(
            "responses, regressors and weights differ in length".into(),
        ));
    }
    if distinct_rows(regressors) < 2 {
        return Err(PersuasionError::InsufficientSupport(
            "regressors take a single value".into(),
        ));
    }
    let wsum: f64 = weights.iter().sum();
    let rows: Vec<DVector<f64>> = regressors.iter().map(|x| design_row(x)).collect();
    let k = rows[0].len();
    if link == Link::Identity {
        return least_squares(responses, &rows, weights, wsum);
    }
    let first = responses[0];
    if responses.iter().all(|y| *y == first) {
        return Err(PersuasionError::PerfectSeparation);
    }
    let ybar = responses
        .iter()
        .zip(weights)
        .map(|(y, w)| y * w)
        .sum::<f64>()
        / wsum;
    let mut beta = DVector::zeros(k);
    beta[0] = link.inverse(ybar);
    let eval = |beta: &DVector<f64>| {
        let mut ll = 0.0;
        let mut score = DVector::zeros(k);
        let mut info = DMatrix::zeros(k, k);
        for ((x, y), w) in rows.iter().zip(responses).zip(weights) {
            let (l, s, i) = obs_terms(link, *y, x.dot(beta));
            ll += w * l;
            score.axpy(w * s, x, 1.0);
            info.ger(w * i, x, x, 1.0);
        }
        (ll, score, info)
    };
    // Under separation the score vanishes as fitted probabilities approach
    // the responses, before the coefficients grow large.
    let separated = |beta: &DVector<f64>| {
        rows.iter()
            .zip(responses)
            .all(|(x, y)| (y - link.cdf(x.dot(beta))).abs() < 1e-6)
    };
    let (mut ll, mut score, mut info) = eval(&beta);
    for iter in 0..=MAX_ITER {
        let grad_norm = score.norm() / wsum;
        let chol = info
            .clone()
            .cholesky()
            .ok_or(PersuasionError::SingularInformation)?;
        if grad_norm <= GRAD_TOL * 1e-2 || (iter == MAX_ITER && grad_norm <= GRAD_TOL) {
            if separated(&beta) {
                return Err(PersuasionError::PerfectSeparation);
            }
            let cov = chol.inverse();
            return Ok(IndexModelFit {
                link,
                coef: beta.iter().copied().collect(),
                se: (0..k).map(|j| cov[(j, j)].sqrt()).collect(),
                iterations: iter,
                grad_norm,
            });
        }
        if iter == MAX_ITER {
            break;
        }
        let step = chol.solve(&score);
        let mut t = 1.0;
        loop {
            let cand = &beta + &step * t;
            let (l, s, i) = eval(&cand);
            if l >= ll - 1e-12 * ll.abs() || t < 1e-10 {
                beta = cand;
                ll = l;
                score = s;
                info = i;
                break;
            }
            t *= 0.5;
        }
        if beta.norm() > SEPARATION_NORM {
            return Err(PersuasionError::PerfectSeparation);
        }
        if score.norm() / wsum <= GRAD_TOL && t < 1e-10 {
            // No further progress is possible at double precision.
            if separated(&beta) {
                return Err(PersuasionError::PerfectSeparation);
            }
            let cov = info
                .clone()
                .cholesky()
                .ok_or(PersuasionError::SingularInformation)?
                .inverse();
            return Ok(IndexModelFit {
                link,
                coef: beta.iter().copied().collect(),
                se: (0..k).map(|j| cov[(j, j)].sqrt()).collect(),
                iterations: iter + 1,
                grad_norm: score.norm() / wsum,
            });
        }
    }
    Err(PersuasionError::NoConvergence(MAX_ITER))
}

fn least_squares(y: &[f64], rows: &[DVector<f64>], w: &[f64], wsum: f64) -> Result<IndexModelFit> {
    let k = rows[0].len();
    let mut xtx = DMatrix::zeros(k, k);
    let mut xty = DVector::zeros(k);
    for ((x, y), w) in rows.iter().zip(y).zip(w) {
        xtx.ger(*w, x, x, 1.0);
        xty.axpy(w * y, x, 1.0);
    }
    let chol = xtx.cholesky().ok_or(PersuasionError::SingularInformation)?;
    let beta = chol.solve(&xty);
    let mut grad = DVector::zeros(k);
    let mut rss = 0.0;
    for ((x, y), w) in rows.iter().zip(y).zip(w) {
        let r = y - x.dot(&beta);
        grad.axpy(w * r, x, 1.0);
        rss += w * r * r;
    }
    let sigma2 = rss / (wsum - k as f64).max(1.0);
    let cov = chol.inverse() * sigma2;
    Ok(IndexModelFit {
        link: Link::Identity,
        coef: beta.iter().copied().collect(),
        se: (0..k).map(|j| cov[(j, j)].sqrt()).collect(),
        iterations: 1,
        grad_norm: grad.norm() / wsum,
    })
}

/// Exposure rate as an index model in the standardized instrument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureModel {
    pub fit: IndexModelFit,
    pub center: f64,
    pub scale: f64,
    /// Range of fitted exposure over the sample.
    pub support: Interval,
}

impl ExposureModel {
    pub fn exposure(&self, z: f64) -> f64 {
        self.fit.predict(&[(z - self.center) / self.scale])
    }
}

pub fn estimate_exposure_curve(sample: &MicroSample, link: Link) -> Result<ExposureModel> {
    if sample.is_empty() {
        return Err(PersuasionError::EmptyInput);
    }
    if !sample.has_treatment {
        return Err(PersuasionError::MissingTreatment);
    }
    let mut zs: Vec<f64> = sample.records.iter().map(|r| r.z).collect();
    zs.sort_by(|a, b| a.total_cmp(b));
    zs.dedup();
    if zs.len() < MIN_DISTINCT_Z {
        return Err(PersuasionError::InsufficientSupport(format!(
            "instrument takes {} distinct values, need at least {MIN_DISTINCT_Z}",
            zs.len()
        )));
    }
    let n = sample.len() as f64;
    let center = sample.records.iter().map(|r| r.z).sum::<f64>() / n;
    let scale = (sample
        .records
        .iter()
        .map(|r| (r.z - center).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let x: Vec<Vec<f64>> = sample
        .records
        .iter()
        .map(|r| vec![(r.z - center) / scale])
        .collect();
    let t: Vec<f64> = sample.records.iter().map(|r| r.treated()).collect();
    let w: Vec<f64> = sample.records.iter().map(|r| r.w).collect();
    let fit = fit_weighted_index_model(&t, &x, &w, link)?;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for xi in &x {
        let e = fit.predict(xi);
        lo = lo.min(e);
        hi = hi.max(e);
    }
    Ok(ExposureModel {
        fit,
        center,
        scale,
        support: Interval::new(lo, hi),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MteCurve {
    pub grid: Vec<f64>,
    /// None where the denominator is at or below the cutoff.
    pub values: Vec<Option<f64>>,
    /// dP(Y=1 | e)/de
    pub numerator: Vec<f64>,
    /// 1 + dP(Y=1, T=0 | e)/de
    pub denominator: Vec<f64>,
}

/// Fitted outcome equations, in powers of e.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MteFit {
    pub exposure: ExposureModel,
    pub treated_outcome: IndexModelFit,
    pub untreated_outcome: IndexModelFit,
    pub degree: usize,
    pub curve: MteCurve,
}

fn powers(e: f64, degree: usize) -> Vec<f64> {
    (1..=degree).map(|k| e.powi(k as i32)).collect()
}

/// d/de of link(b0 + b1 e + b2 e^2 + ...).
pub fn fitted_derivative(fit: &IndexModelFit, e: f64) -> f64 {
    let degree = fit.coef.len() - 1;
    let deta: f64 = (1..=degree)
        .map(|k| k as f64 * fit.coef[k] * e.powi(k as i32 - 1))
        .sum();
    fit.link.pdf(fit.index(&powers(e, degree))) * deta
}

pub fn fitted_value(fit: &IndexModelFit, e: f64) -> f64 {
    fit.predict(&powers(e, fit.coef.len() - 1))
}

/// Derivatives of P(Y=1 | e) and P(Y=1, T=0 | e) at e from the two outcome
/// equations.
pub fn outcome_derivatives(
    treated: &IndexModelFit,
    untreated: &IndexModelFit,
    e: f64,
) -> (f64, f64) {
    let (m1, dm1) = (fitted_value(treated, e), fitted_derivative(treated, e));
    let (m0, dm0) = (fitted_value(untreated, e), fitted_derivative(untreated, e));
    let d_untreated = -m0 + (1.0 - e) * dm0;
    (m1 + e * dm1 + d_untreated, d_untreated)
}

/// Marginal rate from dP(Y=1|e)/de and dP(Y=1,T=0|e)/de; None when the
/// denominator is at or below the cutoff.
pub fn rate_from_derivatives(d_outcome: f64, d_untreated: f64) -> (Option<f64>, f64) {
    let den = 1.0 + d_untreated;
    ((den > DENOM_CUTOFF).then(|| d_outcome / den), den)
}

/// Marginal rates on a grid from the two fitted outcome equations.
pub fn assemble_curve(
    treated: &IndexModelFit,
    untreated: &IndexModelFit,
    grid: &[f64],
) -> MteCurve {
    let mut curve = MteCurve {
        grid: grid.to_vec(),
        values: Vec::with_capacity(grid.len()),
        numerator: Vec::with_capacity(grid.len()),
        denominator: Vec::with_capacity(grid.len()),
    };
    for &v in grid {
        let (num, d_untreated) = outcome_derivatives(treated, untreated, v);
        let (value, den) = rate_from_derivatives(num, d_untreated);
        curve.values.push(value);
        curve.numerator.push(num);
        curve.denominator.push(den);
    }
    curve
}

/// v = 0.01, ..., 0.99 restricted to the interior of the support.
pub fn default_grid(support: Interval) -> Vec<f64> {
    (1..=99)
        .map(|i| i as f64 / 100.0)
        .filter(|v| *v > support.lo && *v < support.hi)
        .collect()
}

/// Full two-step estimate. An empty grid selects the default grid.
pub fn theta_mte_curve(
    sample: &MicroSample,
    grid: &[f64],
    link: Link,
    degree: usize,
) -> Result<MteFit> {
    if !(1..=2).contains(&degree) {
        return Err(PersuasionError::Unsupported(format!(
            "second-step degree {degree}; use 1 or 2"
        )));
    }
    let exposure = estimate_exposure_curve(sample, link)?;
    let grid = if grid.is_empty() {
        default_grid(exposure.support)
    } else {
        grid.to_vec()
    };
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(PersuasionError::Unsupported(
            "grid must be strictly increasing".into(),
        ));
    }
    for &v in &grid {
        if !(v > exposure.support.lo && v < exposure.support.hi) {
            return Err(PersuasionError::GridOutsideSupport(v));
        }
    }
    let arm = |t: u8| {
        let recs: Vec<_> = sample.records.iter().filter(|r| r.t == Some(t)).collect();
        let x: Vec<Vec<f64>> = recs
            .iter()
            .map(|r| powers(exposure.exposure(r.z), degree))
            .collect();
        let y: Vec<f64> = recs.iter().map(|r| r.target()).collect();
        let w: Vec<f64> = recs.iter().map(|r| r.w).collect();
        fit_weighted_index_model(&y, &x, &w, link)
    };
    let treated_outcome = arm(1)?;
    let untreated_outcome = arm(0)?;
    let curve = assemble_curve(&treated_outcome, &untreated_outcome, &grid);
    Ok(MteFit {
        exposure,
        treated_outcome,
        untreated_outcome,
        degree,
        curve,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "weight", content = "values", rename_all = "snake_case")]
pub enum PolicyWeight {
    /// Uniform over the grid range.
    Uniform,
    /// Density values at the grid points.
    Density(Vec<f64>),
    /// Weight proportional to P(Y(0)=0 | V=v): the ratio of the integrated
    /// numerator to the integrated denominator. Recovers the population rate
    /// without requiring V to be independent of Y(0).
    UntreatedOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyIntegral {
    pub value: f64,
    /// Length of the integrated part of [0, 1].
    pub coverage: f64,
}

pub fn integrate_policy(curve: &MteCurve, weight: &PolicyWeight) -> Result<PolicyIntegral> {
    let g = &curve.grid;
    if g.len() < 2 {
        return Err(PersuasionError::InvalidWeight(
            "integration needs at least two grid points".into(),
        ));
    }
    let coverage = g[g.len() - 1] - g[0];
    let defined = |i: usize| curve.values[i].ok_or(PersuasionError::UndefinedPointsInSupport);
    let value = match weight {
        PolicyWeight::Uniform => {
            let v = (0..g.len()).map(defined).collect::<Result<Vec<_>>>()?;
            trapezoid(g, &v) / coverage
        }
        PolicyWeight::Density(w) => {
            if w.len() != g.len() || w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(PersuasionError::InvalidWeight(
                    "density must be nonnegative with one value per grid point".into(),
                ));
            }
            let mass = trapezoid(g, w);
            if (mass - 1.0).abs() > 1e-6 {
                return Err(PersuasionError::InvalidWeight(format!(
                    "density integrates to {mass}, not 1"
                )));
            }
            let mut prod = Vec::with_capacity(g.len());
            for (i, wi) in w.iter().enumerate() {
                prod.push(if *wi > 0.0 { wi * defined(i)? } else { 0.0 });
            }
            trapezoid(g, &prod)
        }
        PolicyWeight::UntreatedOutcome => {
            let den = trapezoid(g, &curve.denominator);
            if den <= DENOM_CUTOFF {
                return Err(PersuasionError::UndefinedPointsInSupport);
            }
            trapezoid(g, &curve.numerator) / den
        }
    };
    Ok(PolicyIntegral { value, coverage })
}
