use thiserror::Error;

/// Errors raised across the library. CLI exit codes are derived from these.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimError { expected: usize, got: usize },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("inadmissible parameters: {0}")]
    ParamError(String),
    #[error("density is not decreasing up to t = {0:e}")]
    NotDecreasing(f64),
    #[error("x lies outside E (b - mu'x = {0:e} <= 0)")]
    OutsideDomain(f64),
    #[error("gaussianBestP requires a Gaussian marginal")]
    WrongMarginal,
    #[error("row {row}: no threshold ({reason})")]
    MissingTheta { row: usize, reason: String },
    #[error("assumption violated: {0}")]
    AssumptionViolated(String),
    #[error("kappa build infeasible at {point:?}: {reason}")]
    InfeasibleBuild { point: Vec<f64>, reason: String },
    #[error("method unavailable: {0}")]
    MethodUnavailable(String),
    #[error("point outside the decision domain X")]
    OutsideX,
    #[error("sampling exhausted: {found} of {wanted} after {draws} draws")]
    SamplingExhausted {
        found: usize,
        wanted: usize,
        draws: usize,
    },
    #[error("origin is not a member of S(p)")]
    OriginNotMember,
    #[error("convexity not certified: p = {p} <= p* = {pstar}")]
    NotCertified { p: f64, pstar: f64 },
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::DomainError(msg.into()))
}
