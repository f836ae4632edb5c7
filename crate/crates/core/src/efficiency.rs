//! Aggregates of covariate-conditional estimands over discrete cells, with
//! standard errors from their efficient influence functions.
//!
//! With cell-frequency estimates the plug-in aggregates are fully
//! nonparametric, so their influence functions are the efficient ones.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::binary::{theta_l, theta_star};
use crate::dist::{tabulate_joint, tabulate_outcome, JointDist, MicroSample, OutcomeOnly};
use crate::error::{PersuasionError, Result};

pub const DEFAULT_MIN_CELL_SIZE: usize = 10;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellEstimate {
    pub key: String,
    pub n: usize,
    /// Weighted share of the whole sample in this cell.
    pub weight: f64,
    /// Weighted share of the cell assigned to z = 1.
    pub pz1: f64,
    pub outcome: OutcomeOnly,
    /// Present when treatment is observed.
    pub joint: Option<JointDist>,
}

impl CellEstimate {
    pub fn e1(&self) -> Option<f64> {
        self.joint.map(|j| j.e1())
    }

    pub fn e0(&self) -> Option<f64> {
        self.joint.map(|j| j.e0())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellEstimates {
    /// Cells in ascending key order.
    pub cells: Vec<CellEstimate>,
    /// Position in `cells` of each record's cell.
    pub record_cell: Vec<usize>,
    /// inf over cells of e(0, x) is positive.
    pub exposure_floor_ok: bool,
    /// sup over cells of e(1, x) is below one.
    pub exposure_ceiling_ok: bool,
    pub warnings: Vec<String>,
}

/// Within-cell weighted frequencies of every conditional probability.
pub fn cell_conditional_estimates(
    sample: &MicroSample,
    min_cell_size: usize,
) -> Result<CellEstimates> {
    if sample.is_empty() {
        return Err(PersuasionError::EmptyInput);
    }
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in sample.records.iter().enumerate() {
        let key = r.cell.as_deref().ok_or(PersuasionError::MissingCell(i))?;
        groups.entry(key).or_default().push(i);
    }
    let total: f64 = sample.records.iter().map(|r| r.w).sum();
    let mut record_cell = vec![0; sample.len()];
    let mut cells = Vec::with_capacity(groups.len());
    let mut warnings = Vec::new();
    for (pos, (key, idx)) in groups.iter().enumerate() {
        let sub = sample.subsample(idx);
        let w: f64 = sub.records.iter().map(|r| r.w).sum();
        let w1: f64 = sub
            .records
            .iter()
            .filter(|r| r.arm() == 1)
            .map(|r| r.w)
            .sum();
        if w1 <= 0.0 || w1 >= w {
            return Err(PersuasionError::EmptyArmInCell(key.to_string()));
        }
        if idx.len() < min_cell_size {
            warnings.push(format!(
                "cell {key} has {} records, below the minimum of {min_cell_size}",
                idx.len()
            ));
        }
        for &i in idx {
            record_cell[i] = pos;
        }
        let joint = if sample.has_treatment {
            Some(tabulate_joint(&sub)?)
        } else {
            None
        };
        cells.push(CellEstimate {
            key: key.to_string(),
            n: idx.len(),
            weight: w / total,
            pz1: w1 / w,
            outcome: tabulate_outcome(&sub)?,
            joint,
        });
    }
    let exposure_floor_ok = cells.iter().all(|c| c.e0().map_or(true, |e| e > 0.0));
    let exposure_ceiling_ok = cells.iter().all(|c| c.e1().map_or(true, |e| e < 1.0));
    Ok(CellEstimates {
        cells,
        record_cell,
        exposure_floor_ok,
        exposure_ceiling_ok,
        warnings,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EfficientEstimate {
    pub estimate: f64,
    /// sqrt(V / n) with V the mean squared influence value.
    pub se: f64,
    pub influence: Vec<f64>,
    pub diagnostics: Vec<String>,
}

impl EfficientEstimate {
    fn new(estimate: f64, influence: Vec<f64>, diagnostics: Vec<String>) -> Self {
        let n = influence.len() as f64;
        let v = influence.iter().map(|f| f * f).sum::<f64>() / n;
        EfficientEstimate {
            estimate,
            se: (v / n).sqrt(),
            influence,
            diagnostics,
        }
    }
}

fn relative_weights(sample: &MicroSample) -> Vec<f64> {
    let wbar = sample.records.iter().map(|r| r.w).sum::<f64>() / sample.len() as f64;
    sample.records.iter().map(|r| r.w / wbar).collect()
}

/// Population lower bound: the cell bounds averaged over the covariate law.
pub fn aggregate_theta_l(sample: &MicroSample, cells: &CellEstimates) -> Result<EfficientEstimate> {
    let mut cond = Vec::with_capacity(cells.cells.len());
    let mut diagnostics = Vec::new();
    for c in &cells.cells {
        let v = theta_l(&c.outcome)
            .map_err(|_| PersuasionError::DegenerateCellDenominator(c.key.clone()))?;
        if !(0.0..=1.0).contains(&v) {
            diagnostics.push(format!("cell {} lower bound {v:.4} outside [0, 1]", c.key));
        }
        cond.push(v);
    }
    let est: f64 = cells
        .cells
        .iter()
        .zip(&cond)
        .map(|(c, v)| c.weight * v)
        .sum();
    let rel = relative_weights(sample);
    let influence = sample
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let k = cells.record_cell[i];
            let c = &cells.cells[k];
            let (p1, p0) = (c.outcome.py1_z1, c.outcome.py1_z0);
            let y = r.target();
            let arm_term = if r.arm() == 1 {
                (y - p1) / (c.pz1 * (1.0 - p0))
            } else {
                (y - p0) * (cond[k] - 1.0) / ((1.0 - c.pz1) * (1.0 - p0))
            };
            rel[i] * (arm_term + cond[k] - est)
        })
        .collect();
    Ok(EfficientEstimate::new(est, influence, diagnostics))
}

/// Conditional probabilities P(Y=1 | T=t, Z=z, X=x); zero for empty cells,
/// where they only ever multiply a zero indicator.
fn y_given_tz(j: &JointDist, t: u8, z: u8) -> f64 {
    let pt = if t == 1 {
        j.arm(z).exposure()
    } else {
        1.0 - j.arm(z).exposure()
    };
    if pt > 0.0 {
        j.p(1, t, z) / pt
    } else {
        0.0
    }
}

/// Complier-weighted local persuasion rate.
pub fn aggregate_theta_star(
    sample: &MicroSample,
    cells: &CellEstimates,
) -> Result<EfficientEstimate> {
    let mut joints = Vec::with_capacity(cells.cells.len());
    for c in &cells.cells {
        joints.push(c.joint.ok_or(PersuasionError::MissingTreatment)?);
    }
    let q2d: f64 = cells
        .cells
        .iter()
        .zip(&joints)
        .map(|(c, j)| c.weight * (j.e1() - j.e0()))
        .sum();
    if q2d <= 0.0 {
        return Err(PersuasionError::NoCompliersGlobal);
    }
    let mut q1 = Vec::with_capacity(joints.len());
    let mut q1d = Vec::with_capacity(joints.len());
    let mut q2 = Vec::with_capacity(joints.len());
    let mut diagnostics = Vec::new();
    for (c, j) in cells.cells.iter().zip(&joints) {
        let d = j.p(0, 0, 0) - j.p(0, 0, 1);
        let share = j.e1() - j.e0();
        if d <= 0.0 && share.abs() <= 1e-12 {
            // No compliers in this cell: it carries zero weight.
            diagnostics.push(format!("cell {} has no compliers", c.key));
            q1.push(0.0);
            q1d.push(f64::INFINITY);
            q2.push(0.0);
            continue;
        }
        if d <= 0.0 {
            return Err(PersuasionError::DegenerateCellDenominator(c.key.clone()));
        }
        q1.push(theta_star(j)?);
        q1d.push(d);
        q2.push(share / q2d);
    }
    let est: f64 = cells
        .cells
        .iter()
        .enumerate()
        .map(|(k, c)| q1[k] * q2[k] * c.weight)
        .sum();
    let s2 = est / q2d;
    let rel = relative_weights(sample);
    let influence = sample
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let k = cells.record_cell[i];
            let c = &cells.cells[k];
            let j = &joints[k];
            let (y, t) = (r.target(), r.treated());
            let z = r.arm();
            let pz = if z == 1 { c.pz1 } else { 1.0 - c.pz1 };
            let scale = q2[k] / q1d[k];
            // Outcome residuals within the (t, z) cell, then the treatment
            // residual within arm z, then the covariate-law term.
            let py1 = y_given_tz(j, 1, z);
            let py0 = y_given_tz(j, 0, z);
            let ti = t as u8;
            let resid = y - y_given_tz(j, ti, z);
            let factor = if ti == 1 { 1.0 } else { 1.0 - q1[k] };
            let sign = if z == 1 { 1.0 } else { -1.0 };
            let outcome_term = sign * resid * scale * factor / pz;
            let bracket = scale * (py1 - (1.0 - q1[k]) * py0 - q1[k]) + q1[k] / q2d - s2;
            let e = j.arm(z).exposure();
            let treat_term = sign * (t - e) / pz * bracket;
            let cov_term = q1[k] * q2[k] - s2 * (j.e1() - j.e0() - q2d) - est;
            rel[i] * (outcome_term + treat_term + cov_term)
        })
        .collect();
    Ok(EfficientEstimate::new(est, influence, diagnostics))
}
