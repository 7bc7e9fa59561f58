use thiserror::Error;

pub type Result<T> = std::result::Result<T, PlqpError>;

#[derive(Debug, Error)]
pub enum PlqpError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid density: {0}")]
    InvalidDensity(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("zero mass")]
    ZeroMass,
    #[error("support touches the boundary ring: {0}")]
    SupportExitsGrid(String),
    #[error("components not isolated: {0}")]
    ComponentsNotIsolated(String),
    #[error("grid specs differ")]
    SpecMismatch,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("q = inf is not a finite exponent; use bottleneck module")]
    UseBottleneck,
    #[error("instance too large: {atoms} atoms exceed the cap of {cap}")]
    TooLarge { atoms: usize, cap: usize },
    #[error("permutation oracle requires uniform weights and equal counts: {0}")]
    NonUniformWeights(String),
    #[error("radial profiles have different centers")]
    CenterMismatch,
    #[error("Isop undefined for n=1")]
    IsopUndefinedInOneDim,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("trajectory has no velocity field")]
    MissingField,
    #[error("CFL violation: max|v|*dt = {courant:.3e} exceeds 0.5h; use dt <= {suggested_dt:.6e}")]
    CflViolation { courant: f64, suggested_dt: f64 },
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("family infeasible: {0}")]
    FamilyInfeasible(String),
    #[error("need ≥ 2 partitions")]
    NeedTwoPartitions,
    #[error("mismatched anchors: {0}")]
    MismatchedAnchors(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl PlqpError {
    /// True for errors raised by a solver on well-formed input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            PlqpError::Infeasible(_)
                | PlqpError::FamilyInfeasible(_)
                | PlqpError::CflViolation { .. }
                | PlqpError::TooLarge { .. }
        )
    }
}
