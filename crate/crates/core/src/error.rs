use thiserror::Error;

/// Errors raised by the solvers and their input validation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The gap function was evaluated at or above the contact level.
    #[error("gap function evaluated at s = {s}, outside its domain s < 1")]
    GapDomain { s: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields belong to different grids")]
    GridMismatch,

    #[error("field carries {got} values but the grid has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A hypothesis required by the requested operation does not hold.
    #[error("hypothesis `{name}` does not hold: {detail}")]
    Hypothesis { name: &'static str, detail: String },

    /// A supplied supersolution or an invariant-based certificate broke.
    #[error("certificate violated at node {node}: {detail}")]
    CertificateViolation { node: usize, detail: String },

    /// Two solutions that must be ordered are not.
    #[error("ordering violated at node {node} (t = {t}): low = {low}, high = {high}")]
    OrderingViolation {
        node: usize,
        t: f64,
        low: f64,
        high: f64,
    },

    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
    },

    #[error(
        "time step fell below dt_min = {dt_min} at t = {t} without reaching the touchdown guard"
    )]
    StepFailure { t: f64, dt_min: f64 },

    /// The bisection predicate holds at the top of the analytic bracket.
    #[error("minimal solution still exists at lambda = {lambda}, above the analytic upper bound")]
    BracketInconsistent { lambda: f64 },

    #[error("dilation scan is empty")]
    EmptyScan,
}

pub type Result<T> = std::result::Result<T, Error>;
