use thiserror::Error;

#[derive(Debug, Error)]
pub enum PersuasionError {
    #[error("input contains no records")]
    EmptyInput,
    #[error("row {row}: invalid value {value:?} in field `{field}`")]
    BadCode {
        row: usize,
        field: &'static str,
        value: String,
    },
    #[error("treatment is observed for some records but not others")]
    MixedObservability,
    #[error("treatment indicator is required but not observed")]
    MissingTreatment,
    #[error("instrument arm z={0} has no records or zero total weight")]
    EmptyArm(u8),
    #[error("invalid probability input: {0}")]
    InvalidProbabilities(String),
    #[error("scenario data inconsistent: {0}")]
    InconsistentScenario(String),
    #[error("degenerate denominator in {0}")]
    DegenerateDenominator(&'static str),
    #[error("no compliers: e(1) <= e(0)")]
    NoCompliers,
    #[error("exposure rate e(1) is zero")]
    ZeroExposure,
    #[error("infeasible boxes: no (a, b) with a >= b")]
    InfeasibleBoxes,
    #[error("degenerate multinomial case: {0}")]
    DegenerateCase(&'static str),
    #[error("significance level {0} outside the admissible range")]
    InvalidAlpha(f64),
    #[error("standard errors must be positive (got {0}, {1})")]
    NonpositiveSigma(f64, f64),
    #[error("root finding failed: {0}")]
    RootFinding(&'static str),
    #[error("perfect separation in binary regression")]
    PerfectSeparation,
    #[error("information matrix is singular")]
    SingularInformation,
    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),
    #[error("insufficient instrument support: {0}")]
    InsufficientSupport(String),
    #[error("grid point {0} outside the interior of the estimated support")]
    GridOutsideSupport(f64),
    #[error("policy weight covers undefined curve points")]
    UndefinedPointsInSupport,
    #[error("invalid policy weight: {0}")]
    InvalidWeight(String),
    #[error("cell {0} lacks one instrument arm")]
    EmptyArmInCell(String),
    #[error("degenerate denominator in cell {0}")]
    DegenerateCellDenominator(String),
    #[error("no compliers in any covariate cell")]
    NoCompliersGlobal,
    #[error("covariate cells are required but missing on row {0}")]
    MissingCell(usize),
    #[error("invalid simulator configuration: {0}")]
    InvalidConfig(String),
    #[error("estimator failed in {failed} of {total} replicates")]
    EstimatorFailedInReplicates { failed: usize, total: usize },
    #[error("unsupported request: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl PersuasionError {
    /// Errors that come from numerical breakdown rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            PersuasionError::DegenerateDenominator(_)
                | PersuasionError::NoCompliers
                | PersuasionError::ZeroExposure
                | PersuasionError::RootFinding(_)
                | PersuasionError::PerfectSeparation
                | PersuasionError::SingularInformation
                | PersuasionError::NoConvergence(_)
                | PersuasionError::DegenerateCellDenominator(_)
                | PersuasionError::NoCompliersGlobal
                | PersuasionError::EstimatorFailedInReplicates { .. }
                | PersuasionError::NonpositiveSigma(_, _)
                | PersuasionError::InfeasibleBoxes
                | PersuasionError::UndefinedPointsInSupport
        )
    }
}

pub type Result<T> = core::result::Result<T, PersuasionError>;
