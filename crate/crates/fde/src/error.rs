use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FdeError {
    #[error("argument {0} is within pole tolerance of a nonpositive integer")]
    PoleProximity(String),
    #[error("complex power with zero base")]
    ZeroBase,
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("series failed to converge: {0}")]
    NonConvergence(String),
    #[error("hypotheses not satisfied: {0}")]
    InvalidHypotheses(String),
    #[error("point outside the admissible region: {0}")]
    RegionViolation(String),
    #[error("truncation too small: estimated error {estimate:e} exceeds {requested:e}")]
    TruncationTooSmall { estimate: f64, requested: f64 },
    #[error("bad contour: {0}")]
    BadContour(String),
    #[error("integrand does not decay at the contour ends: {0}")]
    DecayViolation(String),
    #[error("invalid kernel: {0}")]
    KernelInvalid(String),
    #[error("root bracketing failed on [{lo}, {hi}]")]
    BracketFailure { lo: f64, hi: f64 },
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("excluded angle: {0}")]
    ExcludedAngle(String),
    #[error("summability check failed: {0}")]
    SummabilityFailure(String),
    #[error("unknown problem class: {0}")]
    UnknownClass(String),
    #[error("degenerate coefficients: {0}")]
    DegenerateCoefficients(String),
    #[error("denominator vanishes: {0}")]
    DenominatorZero(String),
    #[error("inadmissible weight: {0}")]
    InvalidWeight(String),
    #[error("not enough zeros in the table: {0}")]
    InsufficientZeros(String),
    #[error("outside the admissible window: {0}")]
    WindowViolation(String),
    #[error("quadrature budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("incompatible parameters: {0}")]
    IncompatibleParams(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, FdeError>;
