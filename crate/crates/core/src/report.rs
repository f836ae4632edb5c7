//! End-to-end runs: load data, pick the information set, compute the
//! recommended estimands with intervals, and render a report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::binary::{
    complier_rates, dk_estimands, itt, mtr_violated, theta_bounds, theta_l_star,
    theta_local_bounds, BoundsResult,
};
use crate::dist::{
    ingest_micro, tabulate_joint, tabulate_mult_joint, tabulate_mult_marginals, tabulate_outcome,
    InstrumentKind, MicroRecord, MicroSample, MultScenarioData, OutcomeMode, Scenario,
    ScenarioData, TwoMarginals, OTHER,
};
use crate::efficiency::{aggregate_theta_l, aggregate_theta_star, cell_conditional_estimates};
use crate::error::{PersuasionError, Result};
use crate::inference::{
    bootstrap_se, ci_itt, ci_theta, ci_theta_local, ConfidenceInterval, Estimator, InferenceInput,
    KnownExposure,
};
use crate::mte::{integrate_policy, theta_mte_curve, Link, PolicyWeight};
use crate::multinomial::{mult_bounds, MultBoundsResult};
use crate::sim::{simulate, DgpConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputFormat {
    CsvMicro,
    JsonCounts,
    DgpJson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioChoice {
    Auto,
    Sharp,
    Full,
    Marginals,
    Outcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeChoice {
    Auto,
    Binary,
    Multinomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Markdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub input: PathBuf,
    pub format: InputFormat,
    pub scenario: ScenarioChoice,
    pub mode: ModeChoice,
    pub alpha: f64,
    /// Pretest level; defaults to min(0.001, alpha / 10).
    pub alpha_bar: Option<f64>,
    /// Bootstrap replicates; 0 skips the bootstrap.
    pub bootstrap: usize,
    pub seed: u64,
    pub output: OutputFormat,
    /// JSON file with known exposure rates {"e1": .., "e0": ..}.
    pub exposure: Option<PathBuf>,
    pub mte_grid: Option<Vec<f64>>,
    pub link: Link,
    pub second_step_degree: usize,
    pub cell_column: Option<String>,
    pub min_cell_size: usize,
    pub drop_t: bool,
    /// Sample size when the input is a simulator configuration.
    pub sim_size: usize,
}

impl RunConfig {
    pub fn new(input: impl Into<PathBuf>, format: InputFormat) -> Self {
        RunConfig {
            input: input.into(),
            format,
            scenario: ScenarioChoice::Auto,
            mode: ModeChoice::Auto,
            alpha: 0.05,
            alpha_bar: None,
            bootstrap: 0,
            seed: 0,
            output: OutputFormat::Json,
            exposure: None,
            mte_grid: None,
            link: Link::Probit,
            second_step_degree: 2,
            cell_column: None,
            min_cell_size: crate::efficiency::DEFAULT_MIN_CELL_SIZE,
            drop_t: false,
            sim_size: 10_000,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(PersuasionError::InvalidAlpha(self.alpha));
        }
        if let Some(ab) = self.alpha_bar {
            if !(ab > 0.0 && ab < self.alpha) {
                return Err(PersuasionError::InvalidAlpha(ab));
            }
        }
        if self.bootstrap > 0 && self.bootstrap < 100 {
            return Err(PersuasionError::InvalidConfig(format!(
                "bootstrap needs at least 100 replicates, got {}",
                self.bootstrap
            )));
        }
        Ok(())
    }

    fn alpha_bar(&self) -> f64 {
        self.alpha_bar.unwrap_or((self.alpha / 10.0).min(0.001))
    }
}

/// Comma-separated values, or lo:hi:step.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = || PersuasionError::InvalidConfig(format!("cannot parse grid {s:?}"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let v: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let (lo, hi, step) = (v[0], v[1], v[2]);
        if !(step > 0.0 && hi >= lo) {
            return Err(bad());
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| lo + step * i as f64).collect());
    }
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub input_digest: String,
    pub seed: u64,
    pub format: InputFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRow {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiRow {
    pub name: String,
    pub ci: ConfidenceInterval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapRow {
    pub name: String,
    pub se: f64,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyRow {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MteReport {
    pub grid: Vec<f64>,
    pub values: Vec<Option<f64>>,
    pub numerator: Vec<f64>,
    pub denominator: Vec<f64>,
    pub exposure_support: (f64, f64),
    /// Uniform average over the grid range, when every point is defined.
    pub uniform_average: Option<f64>,
    /// Average weighted by the untreated non-action share.
    pub outcome_weighted_average: Option<f64>,
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub provenance: Provenance,
    pub scenario: Option<Scenario>,
    pub mode: OutcomeMode,
    pub n: usize,
    pub alpha: f64,
    pub estimates: Vec<PointRow>,
    pub bounds: Vec<BoundsRow>,
    pub intervals: Vec<CiRow>,
    pub bootstrap: Vec<BootstrapRow>,
    pub multinomial: Option<MultBoundsResult>,
    pub efficiency: Vec<EfficiencyRow>,
    pub mte: Option<MteReport>,
    pub diagnostics: Vec<String>,
}

impl Report {
    pub fn estimate(&self, name: &str) -> Option<f64> {
        self.estimates
            .iter()
            .find(|r| r.name == name)
            .map(|r| r.value)
    }

    pub fn bound(&self, name: &str) -> Option<&BoundsRow> {
        self.bounds.iter().find(|r| r.name == name)
    }

    pub fn interval(&self, name: &str) -> Option<&ConfidenceInterval> {
        self.intervals
            .iter()
            .find(|r| r.name == name)
            .map(|r| &r.ci)
    }
}

/// Arm-level counts keyed by "y1", "y0", "y-1", optionally with "_t1"/"_t0".
#[derive(Debug, Clone, Deserialize)]
struct CountsFile {
    z1: BTreeMap<String, u64>,
    z0: BTreeMap<String, u64>,
    #[serde(default)]
    exposure: Option<KnownExposure>,
}

fn parse_count_key(key: &str) -> Result<(i8, Option<u8>)> {
    let bad = || PersuasionError::BadCode {
        row: 0,
        field: "counts key",
        value: key.to_string(),
    };
    let (y, t) = match key.split_once('_') {
        Some((y, t)) => (y, Some(t)),
        None => (key, None),
    };
    let y: i8 = y
        .strip_prefix('y')
        .ok_or_else(bad)?
        .parse()
        .map_err(|_| bad())?;
    let t = match t {
        None => None,
        Some(t) => Some(
            t.strip_prefix('t')
                .ok_or_else(bad)?
                .parse()
                .map_err(|_| bad())?,
        ),
    };
    Ok((y, t))
}

struct Loaded {
    sample: MicroSample,
    exposure: Option<KnownExposure>,
    digest: String,
}

fn digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn detect_mode(rows: &[MicroRecord], choice: ModeChoice) -> OutcomeMode {
    match choice {
        ModeChoice::Binary => OutcomeMode::Binary,
        ModeChoice::Multinomial => OutcomeMode::Multinomial,
        ModeChoice::Auto => {
            if rows.iter().any(|r| r.y == OTHER) {
                OutcomeMode::Multinomial
            } else {
                OutcomeMode::Binary
            }
        }
    }
}

fn detect_instrument(rows: &[MicroRecord]) -> InstrumentKind {
    if rows.iter().all(|r| r.z == 0.0 || r.z == 1.0) {
        InstrumentKind::Binary
    } else {
        InstrumentKind::Continuous
    }
}

fn read_csv(bytes: &[u8], cell_column: Option<&str>) -> Result<Vec<MicroRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let missing = |name: &'static str| PersuasionError::BadCode {
        row: 0,
        field: name,
        value: "missing column".into(),
    };
    let yi = col("y").ok_or_else(|| missing("y"))?;
    let zi = col("z").ok_or_else(|| missing("z"))?;
    let ti = col("t");
    let wi = col("w");
    let ci = match cell_column {
        Some(name) => Some(col(name).ok_or_else(|| missing("cell"))?),
        None => None,
    };
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = |k: usize, name: &'static str| -> Result<&str> {
            rec.get(k).ok_or(PersuasionError::BadCode {
                row: i,
                field: name,
                value: "missing".into(),
            })
        };
        let bad = |name: &'static str, v: &str| PersuasionError::BadCode {
            row: i,
            field: name,
            value: v.to_string(),
        };
        let y = field(yi, "y")?;
        let y: i8 = y.parse().map_err(|_| bad("y", y))?;
        let z = field(zi, "z")?;
        let z: f64 = z.parse().map_err(|_| bad("z", z))?;
        let t = match ti {
            Some(k) => {
                let v = field(k, "t")?;
                if v.is_empty() {
                    None
                } else {
                    Some(v.parse::<u8>().map_err(|_| bad("t", v))?)
                }
            }
            None => None,
        };
        let mut r = MicroRecord::new(y, t, z);
        if let Some(k) = wi {
            let v = field(k, "w")?;
            r.w = v.parse().map_err(|_| bad("w", v))?;
        }
        if let Some(k) = ci {
            r.cell = Some(field(k, "cell")?.to_string());
        }
        rows.push(r);
    }
    Ok(rows)
}

fn read_exposure(path: &Path) -> Result<(KnownExposure, Vec<u8>)> {
    let bytes = std::fs::read(path)?;
    let e: KnownExposure = serde_json::from_slice(&bytes)?;
    if !(0.0..=1.0).contains(&e.e1) || !(0.0..=1.0).contains(&e.e0) {
        return Err(PersuasionError::InvalidProbabilities(
            "exposure rates must lie in [0, 1]".into(),
        ));
    }
    Ok((e, bytes))
}

fn load(cfg: &RunConfig) -> Result<Loaded> {
    let mut bytes = std::fs::read(&cfg.input)?;
    if bytes.iter().all(|b| b.is_ascii_whitespace()) {
        return Err(PersuasionError::EmptyInput);
    }
    let (rows, mut exposure) = match cfg.format {
        InputFormat::CsvMicro => (read_csv(&bytes, cfg.cell_column.as_deref())?, None),
        InputFormat::JsonCounts => {
            let c: CountsFile = serde_json::from_slice(&bytes)?;
            let mut rows = Vec::new();
            for (z, arm) in [(1.0, &c.z1), (0.0, &c.z0)] {
                for (key, n) in arm {
                    let (y, t) = parse_count_key(key)?;
                    for _ in 0..*n {
                        rows.push(MicroRecord::new(y, t, z));
                    }
                }
            }
            (rows, c.exposure)
        }
        InputFormat::DgpJson => {
            let d: DgpConfig = serde_json::from_slice(&bytes)?;
            let s = simulate(&d, cfg.sim_size, cfg.seed)?;
            (s.records, None)
        }
    };
    if rows.is_empty() {
        return Err(PersuasionError::EmptyInput);
    }
    if let Some(path) = &cfg.exposure {
        let (e, extra) = read_exposure(path)?;
        exposure = Some(e);
        bytes.extend_from_slice(&extra);
    }
    let mode = detect_mode(&rows, cfg.mode);
    let instrument = detect_instrument(&rows);
    let mut sample = ingest_micro(rows, mode, instrument)?;
    if cfg.drop_t {
        sample = sample.drop_treatment();
    }
    Ok(Loaded {
        sample,
        exposure,
        digest: digest(&bytes),
    })
}

fn resolve_scenario(
    cfg: &RunConfig,
    sample: &MicroSample,
    exposure: Option<KnownExposure>,
    diagnostics: &mut Vec<String>,
) -> Result<Scenario> {
    let has_t = sample.has_treatment;
    let inconsistent = |m: &str| Err(PersuasionError::InconsistentScenario(m.to_string()));
    match cfg.scenario {
        ScenarioChoice::Auto => Ok(if has_t {
            Scenario::FullJoint
        } else if exposure.is_some() {
            Scenario::MarginalsWithExposure
        } else {
            Scenario::OutcomeOnly
        }),
        ScenarioChoice::Sharp | ScenarioChoice::Full => {
            if !has_t {
                return inconsistent("the full joint needs a treatment column");
            }
            Ok(if cfg.scenario == ScenarioChoice::Sharp {
                Scenario::SharpDesign
            } else {
                Scenario::FullJoint
            })
        }
        ScenarioChoice::Marginals => {
            if has_t {
                diagnostics
                    .push("treatment is observed; using only its marginals as requested".into());
            } else if exposure.is_none() {
                return inconsistent("marginals need exposure rates or a treatment column");
            }
            Ok(Scenario::MarginalsWithExposure)
        }
        ScenarioChoice::Outcome => {
            if has_t || exposure.is_some() {
                diagnostics.push("ignoring treatment information as requested".into());
            }
            Ok(Scenario::OutcomeOnly)
        }
    }
}

fn point(name: &str, value: f64) -> PointRow {
    PointRow {
        name: name.into(),
        value,
    }
}

fn bounds_row(name: &str, b: &BoundsResult) -> BoundsRow {
    BoundsRow {
        name: name.into(),
        lo: b.lo,
        hi: b.hi,
    }
}

/// Keep a local-rate interval inside [0, 1], noting any clipping.
fn clip_unit(mut ci: ConfidenceInterval) -> ConfidenceInterval {
    if ci.lo < 0.0 || ci.hi > 1.0 {
        ci.diagnostics.notes.push(format!(
            "clipped to [0, 1] from [{:.4}, {:.4}]",
            ci.lo, ci.hi
        ));
        ci.lo = ci.lo.max(0.0);
        ci.hi = ci.hi.min(1.0);
    }
    ci
}

fn binary_analysis(
    cfg: &RunConfig,
    sample: &MicroSample,
    scenario: Scenario,
    exposure: Option<KnownExposure>,
    report: &mut Report,
) -> Result<()> {
    // The outcome-only branch must not see the treatment column.
    let outcome_sample;
    let sample = if scenario == Scenario::OutcomeOnly && sample.has_treatment {
        outcome_sample = sample.drop_treatment();
        &outcome_sample
    } else {
        sample
    };
    let o = tabulate_outcome(sample)?;
    if mtr_violated(&o) {
        report
            .diagnostics
            .push("intent-to-treat effect is negative: monotone response is contradicted".into());
    }
    let data = match scenario {
        Scenario::SharpDesign => ScenarioData::sharp(tabulate_joint(sample)?)?,
        Scenario::FullJoint => ScenarioData::FullJoint(tabulate_joint(sample)?),
        Scenario::MarginalsWithExposure => {
            let (e1, e0) = if sample.has_treatment {
                let j = tabulate_joint(sample)?;
                (j.e1(), j.e0())
            } else {
                let e = exposure.ok_or_else(|| {
                    PersuasionError::InconsistentScenario("exposure rates are missing".into())
                })?;
                (e.e1, e.e0)
            };
            ScenarioData::MarginalsWithExposure(TwoMarginals::new(o.py1_z1, o.py1_z0, e1, e0)?)
        }
        Scenario::OutcomeOnly => ScenarioData::OutcomeOnly(o),
    };
    report.estimates.push(point("itt", itt(&o)));
    let theta = theta_bounds(&data)?;
    report.estimates.push(point("theta_L", theta.lo));
    let local = theta_local_bounds(&data)?;
    if let Some(m) = data.two_marginals() {
        let upper = if scenario == Scenario::MarginalsWithExposure {
            "theta_Ue"
        } else {
            "theta_U"
        };
        report.estimates.push(point(upper, theta.hi));
        if m.e1 > m.e0 {
            let dk = dk_estimands(&m)?;
            report.estimates.push(point("wald", dk.wald));
            report
                .estimates
                .push(point("theta_L_star", theta_l_star(&m)?));
            report.estimates.push(point("dk_tilde", dk.dk_tilde));
        } else {
            report
                .diagnostics
                .push("no compliers: e(1) <= e(0); complier quantities skipped".into());
        }
    }
    if let ScenarioData::FullJoint(j) | ScenarioData::SharpDesign(j) = &data {
        report.estimates.push(point("theta_star", local.lo));
        let cr = complier_rates(j)?;
        if cr.out_of_range {
            report
                .diagnostics
                .push("complier outcome rates fall outside [0, 1]".into());
        }
    }
    report.bounds.push(bounds_row("theta", &theta));
    report.bounds.push(bounds_row("theta_local", &local));

    let mut input = InferenceInput::new(sample, scenario);
    if let Some(e) = exposure {
        input = input.with_exposure(e.e1, e.e0);
    }
    report.intervals.push(CiRow {
        name: "itt".into(),
        ci: ci_itt(sample, cfg.alpha)?,
    });
    report.intervals.push(CiRow {
        name: "theta".into(),
        ci: ci_theta(&input, cfg.alpha, cfg.alpha_bar())?,
    });
    report.intervals.push(CiRow {
        name: "theta_local".into(),
        ci: clip_unit(ci_theta_local(&input, cfg.alpha)?),
    });

    if cfg.bootstrap > 0 {
        let mut est = vec![("itt", Estimator::Itt), ("theta_L", Estimator::ThetaL)];
        if sample.has_treatment {
            est.extend([
                ("theta_U", Estimator::ThetaU),
                ("theta_Ue", Estimator::ThetaUe),
                ("wald", Estimator::Wald),
                ("theta_star", Estimator::ThetaStar),
            ]);
        }
        for (name, e) in est {
            // A weak first stage can break ratio estimators in resamples;
            // that is reported rather than aborting the whole run.
            match bootstrap_se(sample, e, cfg.bootstrap, cfg.seed) {
                Ok(se) => report.bootstrap.push(BootstrapRow {
                    name: name.into(),
                    se,
                    replicates: cfg.bootstrap,
                }),
                Err(err @ PersuasionError::EstimatorFailedInReplicates { .. }) => report
                    .diagnostics
                    .push(format!("bootstrap for {name} skipped: {err}")),
                Err(err) => return Err(err),
            }
        }
    }

    if sample.has_cells() {
        let cells = cell_conditional_estimates(sample, cfg.min_cell_size)?;
        report.diagnostics.extend(cells.warnings.iter().cloned());
        let l = aggregate_theta_l(sample, &cells)?;
        report.diagnostics.extend(l.diagnostics.iter().cloned());
        report.efficiency.push(EfficiencyRow {
            name: "theta_L".into(),
            estimate: l.estimate,
            se: l.se,
            cells: cells.cells.len(),
        });
        if sample.has_treatment {
            let s = aggregate_theta_star(sample, &cells)?;
            report.efficiency.push(EfficiencyRow {
                name: "theta_star".into(),
                estimate: s.estimate,
                se: s.se,
                cells: cells.cells.len(),
            });
        }
    }
    Ok(())
}

fn multinomial_analysis(
    sample: &MicroSample,
    scenario: Scenario,
    exposure: Option<KnownExposure>,
    report: &mut Report,
) -> Result<()> {
    let data = match scenario {
        Scenario::SharpDesign | Scenario::FullJoint => {
            MultScenarioData::FullJoint(tabulate_mult_joint(sample)?)
        }
        Scenario::MarginalsWithExposure => {
            let mut m = tabulate_mult_marginals(sample)?;
            let (e1, e0) = if sample.has_treatment {
                let j = tabulate_mult_joint(sample)?;
                (j.e1(), j.e0())
            } else {
                let e = exposure.ok_or_else(|| {
                    PersuasionError::InconsistentScenario("exposure rates are missing".into())
                })?;
                (e.e1, e.e0)
            };
            m.e1 = Some(e1);
            m.e0 = Some(e0);
            MultScenarioData::MarginalsWithExposure(m)
        }
        Scenario::OutcomeOnly => MultScenarioData::OutcomeOnly(tabulate_mult_marginals(sample)?),
    };
    let r = mult_bounds(&data)?;
    report.bounds.push(BoundsRow {
        name: "theta_mult".into(),
        lo: r.lo,
        hi: r.hi,
    });
    report.multinomial = Some(r);
    Ok(())
}

fn mte_analysis(cfg: &RunConfig, sample: &MicroSample, report: &mut Report) -> Result<()> {
    if !sample.has_treatment {
        return Err(PersuasionError::MissingTreatment);
    }
    let grid = cfg.mte_grid.clone().unwrap_or_default();
    let fit = theta_mte_curve(sample, &grid, cfg.link, cfg.second_step_degree)?;
    let c = &fit.curve;
    let uniform = integrate_policy(c, &PolicyWeight::Uniform).ok();
    let weighted = integrate_policy(c, &PolicyWeight::UntreatedOutcome).ok();
    if c.values.iter().any(|v| v.is_none()) {
        report
            .diagnostics
            .push("some grid points have a vanishing denominator".into());
    }
    report.mte = Some(MteReport {
        grid: c.grid.clone(),
        values: c.values.clone(),
        numerator: c.numerator.clone(),
        denominator: c.denominator.clone(),
        exposure_support: (fit.exposure.support.lo, fit.exposure.support.hi),
        uniform_average: uniform.map(|p| p.value),
        outcome_weighted_average: weighted.map(|p| p.value),
        coverage: uniform.or(weighted).map_or(0.0, |p| p.coverage),
    });
    Ok(())
}

pub fn run(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let loaded = load(cfg)?;
    let sample = &loaded.sample;
    let mut report = Report {
        provenance: Provenance {
            tool_version: env!("CARGO_PKG_VERSION").into(),
            input_digest: loaded.digest.clone(),
            seed: cfg.seed,
            format: cfg.format,
        },
        scenario: None,
        mode: sample.mode,
        n: sample.len(),
        alpha: cfg.alpha,
        estimates: Vec::new(),
        bounds: Vec::new(),
        intervals: Vec::new(),
        bootstrap: Vec::new(),
        multinomial: None,
        efficiency: Vec::new(),
        mte: None,
        diagnostics: Vec::new(),
    };
    if sample.instrument == InstrumentKind::Continuous {
        mte_analysis(cfg, sample, &mut report)?;
        return Ok(report);
    }
    let scenario = resolve_scenario(cfg, sample, loaded.exposure, &mut report.diagnostics)?;
    report.scenario = Some(scenario);
    if sample.mode == OutcomeMode::Multinomial {
        multinomial_analysis(sample, scenario, loaded.exposure, &mut report)?;
        let binary = sample.collapse_binary();
        binary_analysis(cfg, &binary, scenario, loaded.exposure, &mut report)?;
    } else {
        binary_analysis(cfg, sample, scenario, loaded.exposure, &mut report)?;
    }
    Ok(report)
}

pub fn render_json(report: &Report) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)? + "\n")
}

fn f4(x: f64) -> String {
    format!("{x:.4}")
}

pub fn render_markdown(report: &Report) -> String {
    let mut out = String::new();
    let scenario = report
        .scenario
        .map_or("continuous instrument".to_string(), |s| {
            serde_json::to_value(s)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default()
        });
    let _ = writeln!(out, "# Persuasion report\n");
    let _ = writeln!(
        out,
        "n = {}, scenario = {scenario}, alpha = {}\n",
        report.n, report.alpha
    );
    if !report.estimates.is_empty() {
        let _ = writeln!(out, "| estimate | value |\n|---|---|");
        for r in &report.estimates {
            let _ = writeln!(out, "| {} | {} |", r.name, f4(r.value));
        }
        out.push('\n');
    }
    if !report.bounds.is_empty() {
        let _ = writeln!(out, "| bounds | lower | upper |\n|---|---|---|");
        for r in &report.bounds {
            let _ = writeln!(out, "| {} | {} | {} |", r.name, f4(r.lo), f4(r.hi));
        }
        out.push('\n');
    }
    if !report.intervals.is_empty() {
        let _ = writeln!(
            out,
            "| interval | lower | upper | level | method |\n|---|---|---|---|---|"
        );
        for r in &report.intervals {
            let method = serde_json::to_value(r.ci.method)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default();
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {method} |",
                r.name,
                f4(r.ci.lo),
                f4(r.ci.hi),
                f4(r.ci.level)
            );
        }
        out.push('\n');
    }
    if !report.bootstrap.is_empty() {
        let _ = writeln!(out, "| bootstrap se | value | replicates |\n|---|---|---|");
        for r in &report.bootstrap {
            let _ = writeln!(out, "| {} | {} | {} |", r.name, f4(r.se), r.replicates);
        }
        out.push('\n');
    }
    if !report.efficiency.is_empty() {
        let _ = writeln!(
            out,
            "| cell aggregate | estimate | se | cells |\n|---|---|---|---|"
        );
        for r in &report.efficiency {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} |",
                r.name,
                f4(r.estimate),
                f4(r.se),
                r.cells
            );
        }
        out.push('\n');
    }
    if let Some(m) = &report.mte {
        let _ = writeln!(out, "| v | marginal rate |\n|---|---|");
        for (v, x) in m.grid.iter().zip(&m.values) {
            let x = x.map_or("undefined".to_string(), f4);
            let _ = writeln!(out, "| {} | {x} |", f4(*v));
        }
        out.push('\n');
        if let Some(a) = m.uniform_average {
            let _ = writeln!(out, "uniform average: {}", f4(a));
        }
        if let Some(a) = m.outcome_weighted_average {
            let _ = writeln!(out, "outcome-weighted average: {}", f4(a));
        }
        out.push('\n');
    }
    if !report.diagnostics.is_empty() {
        let _ = writeln!(out, "Diagnostics:\n");
        for d in &report.diagnostics {
            let _ = writeln!(out, "- {d}");
        }
        out.push('\n');
    }
    let _ = writeln!(
        out,
        "input sha256 {} | seed {} | version {}",
        report.provenance.input_digest, report.provenance.seed, report.provenance.tool_version
    );
    out
}

pub fn render(report: &Report, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Json => render_json(report),
        OutputFormat::Markdown => Ok(render_markdown(report)),
    }
}

/// Process exit code for an error: 3 for numerical breakdown, 2 otherwise.
pub fn exit_code(e: &PersuasionError) -> i32 {
    if e.is_numerical() {
        3
    } else {
        2
    }
}
