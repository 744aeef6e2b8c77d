use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid time scale: {0}")]
    InvalidScale(String),
    #[error("point {0} is not in the time scale")]
    PointNotInScale(String),
    #[error("point {0} lies outside the function's domain")]
    PointOutsideDomain(String),
    #[error("operation requires a discrete time scale")]
    UnsupportedOnContinuousScale,
    #[error("invalid interval: {0}")]
    InvalidInterval(String),
    #[error("function tables must list every scale point of the domain: {0}")]
    TableMismatch(String),
    #[error("functions are not defined on the same scale and domain")]
    ScaleMismatch,

    #[error("dense point {0} needs an analytic derivative")]
    DensePointWithoutAnalyticDerivative(String),
    #[error("derivative domain is empty")]
    EmptyDerivativeDomain,
    #[error("domain exhausted after {0} derivative(s)")]
    DomainExhausted(usize),
    #[error("derivative of the denominator is zero or changes sign on [a, x[")]
    SignConditionViolated,
    #[error("degenerate interval: {0}")]
    DegenerateInterval(String),

    #[error("denominator g(x) - g(end) vanishes at x = {0}")]
    ZeroDenominator(String),
    #[error("limit from samples is only available toward a dense endpoint; {0} is scattered")]
    LimitUnavailable(String),
    #[error("endpoint limit did not settle within {0} samples")]
    LimitNotConverged(usize),
    #[error("scale has {0} points, at least {1} required")]
    ScaleTooSmall(usize, usize),

    #[error("invalid q-context: {0}")]
    InvalidContext(String),
    #[error("order must be non-negative, got {0}")]
    NegativeN(i64),
    #[error("q-derivative at 0 needs f'(0)")]
    MissingDerivativeAtZero,
    #[error("|x| = {x} is outside the radius of convergence {radius} of the q-exponential series")]
    OutsideRadiusOfConvergence { x: f64, radius: f64 },
    #[error("series tail not certified after {0} terms")]
    TailNotCertified(usize),
    #[error("invalid bound problem: {0}")]
    InvalidProblem(String),

    #[error("parse error: {0}")]
    Parse(String),
    #[error("csv error: {0}")]
    Csv(String),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
