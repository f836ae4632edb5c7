//! Data model for every information set: unit records, the conditional
//! joint distribution of (Y, T) given Z, outcome marginals with or without
//! exposure rates, and the multinomial analogues.

use serde::{Deserialize, Serialize};

use crate::error::{PersuasionError, Result};

const SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeMode {
    Binary,
    Multinomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstrumentKind {
    Binary,
    Continuous,
}

/// Multinomial outcome codes.
pub const OUTSIDE: i8 = 0;
pub const TARGET: i8 = 1;
pub const OTHER: i8 = -1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicroRecord {
    pub y: i8,
    pub t: Option<u8>,
    pub z: f64,
    pub w: f64,
    pub cell: Option<String>,
}

impl MicroRecord {
    pub fn new(y: i8, t: Option<u8>, z: f64) -> Self {
        MicroRecord {
            y,
            t,
            z,
            w: 1.0,
            cell: None,
        }
    }

    pub fn with_weight(mut self, w: f64) -> Self {
        self.w = w;
        self
    }

    pub fn with_cell(mut self, cell: impl Into<String>) -> Self {
        self.cell = Some(cell.into());
        self
    }

    /// Instrument arm for binary instruments.
    pub fn arm(&self) -> u8 {
        if self.z == 1.0 {
            1
        } else {
            0
        }
    }

    /// Indicator that the target action was taken.
    pub fn target(&self) -> f64 {
        if self.y == TARGET {
            1.0
        } else {
            0.0
        }
    }

    pub fn treated(&self) -> f64 {
        match self.t {
            Some(1) => 1.0,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MicroSample {
    pub records: Vec<MicroRecord>,
    pub mode: OutcomeMode,
    pub instrument: InstrumentKind,
    pub has_treatment: bool,
    pub n_z1: usize,
    pub n_z0: usize,
}

impl MicroSample {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn has_cells(&self) -> bool {
        !self.records.is_empty() && self.records.iter().all(|r| r.cell.is_some())
    }

    /// Copy with the treatment column removed.
    pub fn drop_treatment(&self) -> MicroSample {
        let mut out = self.clone();
        for r in &mut out.records {
            r.t = None;
        }
        out.has_treatment = false;
        out
    }

    /// Copy with every outcome collapsed to target versus not target.
    pub fn collapse_binary(&self) -> MicroSample {
        let mut out = self.clone();
        for r in &mut out.records {
            r.y = if r.y == TARGET { 1 } else { 0 };
        }
        out.mode = OutcomeMode::Binary;
        out
    }

    /// Sample built from a subset of record indices, keeping metadata.
    pub fn subsample(&self, idx: &[usize]) -> MicroSample {
        let records: Vec<MicroRecord> = idx.iter().map(|&i| self.records[i].clone()).collect();
        let (n_z1, n_z0) = arm_counts(&records, self.instrument);
        MicroSample {
            records,
            mode: self.mode,
            instrument: self.instrument,
            has_treatment: self.has_treatment,
            n_z1,
            n_z0,
        }
    }
}

fn arm_counts(records: &[MicroRecord], instrument: InstrumentKind) -> (usize, usize) {
    if instrument == InstrumentKind::Continuous {
        return (0, 0);
    }
    let n1 = records.iter().filter(|r| r.arm() == 1).count();
    (n1, records.len() - n1)
}

/// Validate parsed rows and wrap them in a sample. Input order is kept.
pub fn ingest_micro(
    rows: Vec<MicroRecord>,
    mode: OutcomeMode,
    instrument: InstrumentKind,
) -> Result<MicroSample> {
    if rows.is_empty() {
        return Err(PersuasionError::EmptyInput);
    }
    let has_treatment = rows[0].t.is_some();
    for (i, r) in rows.iter().enumerate() {
        let y_ok = match mode {
            OutcomeMode::Binary => r.y == 0 || r.y == 1,
            OutcomeMode::Multinomial => r.y == OUTSIDE || r.y == TARGET || r.y == OTHER,
        };
        if !y_ok {
            return Err(PersuasionError::BadCode {
                row: i,
                field: "y",
                value: r.y.to_string(),
            });
        }
        if let Some(t) = r.t {
            if t > 1 {
                return Err(PersuasionError::BadCode {
                    row: i,
                    field: "t",
                    value: t.to_string(),
                });
            }
        }
        if r.t.is_some() != has_treatment {
            return Err(PersuasionError::MixedObservability);
        }
        let z_ok = match instrument {
            InstrumentKind::Binary => r.z == 0.0 || r.z == 1.0,
            InstrumentKind::Continuous => r.z.is_finite(),
        };
        if !z_ok {
            return Err(PersuasionError::BadCode {
                row: i,
                field: "z",
                value: r.z.to_string(),
            });
        }
        if !(r.w.is_finite() && r.w >= 0.0) {
            return Err(PersuasionError::BadCode {
                row: i,
                field: "w",
                value: r.w.to_string(),
            });
        }
    }
    let (n_z1, n_z0) = arm_counts(&rows, instrument);
    Ok(MicroSample {
        records: rows,
        mode,
        instrument,
        has_treatment,
        n_z1,
        n_z0,
    })
}

/// Cell probabilities p(y, t | z) within one instrument arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmCells {
    pub y1t1: f64,
    pub y1t0: f64,
    pub y0t1: f64,
    pub y0t0: f64,
}

impl ArmCells {
    pub fn from_counts(y1t1: f64, y1t0: f64, y0t1: f64, y0t0: f64) -> Result<Self> {
        let total = y1t1 + y1t0 + y0t1 + y0t0;
        if [y1t1, y1t0, y0t1, y0t0]
            .iter()
            .any(|c| !(c.is_finite() && *c >= 0.0))
            || total <= 0.0
        {
            return Err(PersuasionError::InvalidProbabilities(
                "counts must be nonnegative with a positive total".into(),
            ));
        }
        Ok(ArmCells {
            y1t1: y1t1 / total,
            y1t0: y1t0 / total,
            y0t1: y0t1 / total,
            y0t0: y0t0 / total,
        })
    }

    pub fn exposure(&self) -> f64 {
        self.y1t1 + self.y0t1
    }

    pub fn outcome(&self) -> f64 {
        self.y1t1 + self.y1t0
    }

    fn validate(&self) -> Result<()> {
        let cells = [self.y1t1, self.y1t0, self.y0t1, self.y0t0];
        if cells
            .iter()
            .any(|p| !(p.is_finite() && (0.0..=1.0).contains(p)))
        {
            return Err(PersuasionError::InvalidProbabilities(
                "cell probability outside [0, 1]".into(),
            ));
        }
        let s: f64 = cells.iter().sum();
        if (s - 1.0).abs() > SUM_TOL {
            return Err(PersuasionError::InvalidProbabilities(format!(
                "arm cells sum to {s}"
            )));
        }
        Ok(())
    }
}

/// Conditional joint distribution of (Y, T) given Z for a binary outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointDist {
    pub z1: ArmCells,
    pub z0: ArmCells,
    /// Effective sample sizes per arm (Kish); infinite for population inputs.
    pub n_z1: f64,
    pub n_z0: f64,
}

impl JointDist {
    pub fn new(z1: ArmCells, z0: ArmCells) -> Result<Self> {
        z1.validate()?;
        z0.validate()?;
        Ok(JointDist {
            z1,
            z0,
            n_z1: f64::INFINITY,
            n_z0: f64::INFINITY,
        })
    }

    /// Build from raw counts ordered (y1t1, y1t0, y0t1, y0t0) for each arm.
    pub fn from_counts(z1: [f64; 4], z0: [f64; 4]) -> Result<Self> {
        let a1 = ArmCells::from_counts(z1[0], z1[1], z1[2], z1[3])?;
        let a0 = ArmCells::from_counts(z0[0], z0[1], z0[2], z0[3])?;
        Ok(JointDist {
            z1: a1,
            z0: a0,
            n_z1: z1.iter().sum(),
            n_z0: z0.iter().sum(),
        })
    }

    pub fn arm(&self, z: u8) -> &ArmCells {
        if z == 1 {
            &self.z1
        } else {
            &self.z0
        }
    }

    /// p(y, t | z).
    pub fn p(&self, y: u8, t: u8, z: u8) -> f64 {
        let a = self.arm(z);
        match (y, t) {
            (1, 1) => a.y1t1,
            (1, 0) => a.y1t0,
            (0, 1) => a.y0t1,
            _ => a.y0t0,
        }
    }

    pub fn e1(&self) -> f64 {
        self.z1.exposure()
    }

    pub fn e0(&self) -> f64 {
        self.z0.exposure()
    }

    /// Pr(Y = 1 | Z = z).
    pub fn py1(&self, z: u8) -> f64 {
        self.arm(z).outcome()
    }

    /// Whether exposure is bounded away from the boundary: e(0) > 0 and e(1) < 1.
    pub fn regular(&self) -> bool {
        self.e0() > 0.0 && self.e1() < 1.0
    }

    pub fn is_sharp_design(&self) -> bool {
        (self.e1() - self.e0() - 1.0).abs() <= 1e-9
    }

    pub fn to_two_marginals(&self) -> TwoMarginals {
        TwoMarginals {
            py1_z1: self.py1(1),
            py1_z0: self.py1(0),
            e1: self.e1(),
            e0: self.e0(),
        }
    }

    pub fn to_outcome_only(&self) -> OutcomeOnly {
        OutcomeOnly {
            py1_z1: self.py1(1),
            py1_z0: self.py1(0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoMarginals {
    pub py1_z1: f64,
    pub py1_z0: f64,
    pub e1: f64,
    pub e0: f64,
}

impl TwoMarginals {
    pub fn new(py1_z1: f64, py1_z0: f64, e1: f64, e0: f64) -> Result<Self> {
        check_rates(&[py1_z1, py1_z0, e1, e0])?;
        Ok(TwoMarginals {
            py1_z1,
            py1_z0,
            e1,
            e0,
        })
    }

    pub fn to_outcome_only(&self) -> OutcomeOnly {
        OutcomeOnly {
            py1_z1: self.py1_z1,
            py1_z0: self.py1_z0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeOnly {
    pub py1_z1: f64,
    pub py1_z0: f64,
}

impl OutcomeOnly {
    pub fn new(py1_z1: f64, py1_z0: f64) -> Result<Self> {
        check_rates(&[py1_z1, py1_z0])?;
        Ok(OutcomeOnly { py1_z1, py1_z0 })
    }
}

fn check_rates(v: &[f64]) -> Result<()> {
    if v.iter()
        .any(|p| !(p.is_finite() && (0.0..=1.0).contains(p)))
    {
        return Err(PersuasionError::InvalidProbabilities(
            "rate outside [0, 1]".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    SharpDesign,
    FullJoint,
    MarginalsWithExposure,
    OutcomeOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ScenarioData {
    SharpDesign(JointDist),
    FullJoint(JointDist),
    MarginalsWithExposure(TwoMarginals),
    OutcomeOnly(OutcomeOnly),
}

impl ScenarioData {
    pub fn sharp(j: JointDist) -> Result<Self> {
        if !j.is_sharp_design() {
            return Err(PersuasionError::InconsistentScenario(format!(
                "sharp design needs e1 - e0 = 1, got {}",
                j.e1() - j.e0()
            )));
        }
        Ok(ScenarioData::SharpDesign(j))
    }

    pub fn scenario(&self) -> Scenario {
        match self {
            ScenarioData::SharpDesign(_) => Scenario::SharpDesign,
            ScenarioData::FullJoint(_) => Scenario::FullJoint,
            ScenarioData::MarginalsWithExposure(_) => Scenario::MarginalsWithExposure,
            ScenarioData::OutcomeOnly(_) => Scenario::OutcomeOnly,
        }
    }

    pub fn outcome_only(&self) -> OutcomeOnly {
        match self {
            ScenarioData::SharpDesign(j) | ScenarioData::FullJoint(j) => j.to_outcome_only(),
            ScenarioData::MarginalsWithExposure(m) => m.to_outcome_only(),
            ScenarioData::OutcomeOnly(o) => *o,
        }
    }

    pub fn two_marginals(&self) -> Option<TwoMarginals> {
        match self {
            ScenarioData::SharpDesign(j) | ScenarioData::FullJoint(j) => Some(j.to_two_marginals()),
            ScenarioData::MarginalsWithExposure(m) => Some(*m),
            ScenarioData::OutcomeOnly(_) => None,
        }
    }
}

struct ArmAccumulator {
    cells: [f64; 4],
    w: f64,
    w2: f64,
}

impl ArmAccumulator {
    fn new() -> Self {
        ArmAccumulator {
            cells: [0.0; 4],
            w: 0.0,
            w2: 0.0,
        }
    }

    fn kish(&self) -> f64 {
        if self.w2 > 0.0 {
            self.w * self.w / self.w2
        } else {
            0.0
        }
    }
}

fn require_binary_instrument(sample: &MicroSample) -> Result<()> {
    if sample.instrument != InstrumentKind::Binary {
        return Err(PersuasionError::Unsupported(
            "tabulation needs a binary instrument".into(),
        ));
    }
    Ok(())
}

/// Weighted within-arm cell shares of (Y, T); the outcome is target versus not.
pub fn tabulate_joint(sample: &MicroSample) -> Result<JointDist> {
    require_binary_instrument(sample)?;
    if !sample.has_treatment {
        return Err(PersuasionError::MissingTreatment);
    }
    let mut acc = [ArmAccumulator::new(), ArmAccumulator::new()];
    for r in &sample.records {
        let a = &mut acc[r.arm() as usize];
        let y = r.y == TARGET;
        let t = r.t == Some(1);
        let k = match (y, t) {
            (true, true) => 0,
            (true, false) => 1,
            (false, true) => 2,
            (false, false) => 3,
        };
        a.cells[k] += r.w;
        a.w += r.w;
        a.w2 += r.w * r.w;
    }
    for z in [1u8, 0] {
        if acc[z as usize].w <= 0.0 {
            return Err(PersuasionError::EmptyArm(z));
        }
    }
    let arm = |a: &ArmAccumulator| ArmCells {
        y1t1: a.cells[0] / a.w,
        y1t0: a.cells[1] / a.w,
        y0t1: a.cells[2] / a.w,
        y0t0: a.cells[3] / a.w,
    };
    Ok(JointDist {
        z1: arm(&acc[1]),
        z0: arm(&acc[0]),
        n_z1: acc[1].kish(),
        n_z0: acc[0].kish(),
    })
}

/// Weighted within-arm share of the target outcome; ignores treatment.
pub fn tabulate_outcome(sample: &MicroSample) -> Result<OutcomeOnly> {
    require_binary_instrument(sample)?;
    // Treated and untreated target shares are kept apart and summed after
    // division, the same arithmetic as the joint tabulation, so both routes
    // give identical outcome rates.
    let mut num = [[0.0; 2]; 2];
    let mut den = [0.0; 2];
    for r in &sample.records {
        let z = r.arm() as usize;
        let t = usize::from(r.t != Some(1));
        num[z][t] += r.w * r.target();
        den[z] += r.w;
    }
    for z in [1u8, 0] {
        if den[z as usize] <= 0.0 {
            return Err(PersuasionError::EmptyArm(z));
        }
    }
    let rate = |z: usize| num[z][0] / den[z] + num[z][1] / den[z];
    Ok(OutcomeOnly {
        py1_z1: rate(1),
        py1_z0: rate(0),
    })
}

/// Multinomial cell probabilities p_j(1, t | z) within one arm, indexed by t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultArm {
    pub target: [f64; 2],
    pub outside: [f64; 2],
    pub other: [f64; 2],
}

impl MultArm {
    pub fn exposure(&self) -> f64 {
        self.target[1] + self.outside[1] + self.other[1]
    }

    /// Marginal share of each category: (target, outside, other).
    pub fn marginals(&self) -> [f64; 3] {
        [
            self.target[0] + self.target[1],
            self.outside[0] + self.outside[1],
            self.other[0] + self.other[1],
        ]
    }

    fn validate(&self) -> Result<()> {
        let all = [
            self.target[0],
            self.target[1],
            self.outside[0],
            self.outside[1],
            self.other[0],
            self.other[1],
        ];
        if all
            .iter()
            .any(|p| !(p.is_finite() && (0.0..=1.0).contains(p)))
        {
            return Err(PersuasionError::InvalidProbabilities(
                "multinomial cell outside [0, 1]".into(),
            ));
        }
        let s: f64 = all.iter().sum();
        if (s - 1.0).abs() > SUM_TOL {
            return Err(PersuasionError::InvalidProbabilities(format!(
                "multinomial arm sums to {s}"
            )));
        }
        Ok(())
    }
}

/// Joint distribution of (multinomial Y, T) given Z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultJointDist {
    pub z1: MultArm,
    pub z0: MultArm,
}

impl MultJointDist {
    pub fn new(z1: MultArm, z0: MultArm) -> Result<Self> {
        z1.validate()?;
        z0.validate()?;
        Ok(MultJointDist { z1, z0 })
    }

    pub fn arm(&self, z: u8) -> &MultArm {
        if z == 1 {
            &self.z1
        } else {
            &self.z0
        }
    }

    pub fn e1(&self) -> f64 {
        self.z1.exposure()
    }

    pub fn e0(&self) -> f64 {
        self.z0.exposure()
    }

    pub fn to_marginals(&self) -> MultMarginals {
        MultMarginals {
            z1: self.z1.marginals(),
            z0: self.z0.marginals(),
            e1: Some(self.e1()),
            e0: Some(self.e0()),
        }
    }

    /// Collapse to the binary target-versus-rest joint distribution.
    pub fn collapse_binary(&self) -> JointDist {
        let arm = |a: &MultArm| ArmCells {
            y1t1: a.target[1],
            y1t0: a.target[0],
            y0t1: a.outside[1] + a.other[1],
            y0t0: a.outside[0] + a.other[0],
        };
        JointDist {
            z1: arm(&self.z1),
            z0: arm(&self.z0),
            n_z1: f64::INFINITY,
            n_z0: f64::INFINITY,
        }
    }
}

/// Outcome marginals (target, outside, other) per arm, with optional exposure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultMarginals {
    pub z1: [f64; 3],
    pub z0: [f64; 3],
    pub e1: Option<f64>,
    pub e0: Option<f64>,
}

impl MultMarginals {
    pub fn validate(&self) -> Result<()> {
        for arm in [&self.z1, &self.z0] {
            check_rates(arm)?;
            let s: f64 = arm.iter().sum();
            if (s - 1.0).abs() > SUM_TOL {
                return Err(PersuasionError::InvalidProbabilities(format!(
                    "multinomial marginals sum to {s}"
                )));
            }
        }
        for e in [self.e1, self.e0].into_iter().flatten() {
            check_rates(&[e])?;
        }
        Ok(())
    }

    pub fn collapse_binary(&self) -> OutcomeOnly {
        OutcomeOnly {
            py1_z1: self.z1[0],
            py1_z0: self.z0[0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MultScenarioData {
    FullJoint(MultJointDist),
    MarginalsWithExposure(MultMarginals),
    OutcomeOnly(MultMarginals),
}

pub fn tabulate_mult_joint(sample: &MicroSample) -> Result<MultJointDist> {
    require_binary_instrument(sample)?;
    if !sample.has_treatment {
        return Err(PersuasionError::MissingTreatment);
    }
    let mut cells = [[[0.0f64; 2]; 3]; 2];
    let mut tot = [0.0f64; 2];
    for r in &sample.records {
        let z = r.arm() as usize;
        let j = match r.y {
            TARGET => 0,
            OUTSIDE => 1,
            _ => 2,
        };
        let t = r.t.unwrap_or(0) as usize;
        cells[z][j][t] += r.w;
        tot[z] += r.w;
    }
    for z in [1u8, 0] {
        if tot[z as usize] <= 0.0 {
            return Err(PersuasionError::EmptyArm(z));
        }
    }
    let arm = |z: usize| {
        let f = |j: usize| [cells[z][j][0] / tot[z], cells[z][j][1] / tot[z]];
        MultArm {
            target: f(0),
            outside: f(1),
            other: f(2),
        }
    };
    Ok(MultJointDist {
        z1: arm(1),
        z0: arm(0),
    })
}

pub fn tabulate_mult_marginals(sample: &MicroSample) -> Result<MultMarginals> {
    require_binary_instrument(sample)?;
    let mut m = [[0.0f64; 3]; 2];
    let mut tot = [0.0f64; 2];
    for r in &sample.records {
        let z = r.arm() as usize;
        let j = match r.y {
            TARGET => 0,
            OUTSIDE => 1,
            _ => 2,
        };
        m[z][j] += r.w;
        tot[z] += r.w;
    }
    for z in [1u8, 0] {
        if tot[z as usize] <= 0.0 {
            return Err(PersuasionError::EmptyArm(z));
        }
    }
    let norm = |z: usize| [m[z][0] / tot[z], m[z][1] / tot[z], m[z][2] / tot[z]];
    Ok(MultMarginals {
        z1: norm(1),
        z0: norm(0),
        e1: None,
        e0: None,
    })
}

/// Expand integer cell counts into unit records, arm 1 first.
pub fn expand_counts(counts: &[(i8, Option<u8>, u8, u64)]) -> Vec<MicroRecord> {
    let mut out = Vec::new();
    for &(y, t, z, n) in counts {
        for _ in 0..n {
            out.push(MicroRecord::new(y, t, z as f64));
        }
    }
    out
}
