use thiserror::Error;

/// Every failure the numerical laboratory can report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("grid needs at least 3 interior nodes per axis, got {0}")]
    TooFewNodes(usize),

    #[error("point ({x}, {y}) lies outside the closed domain")]
    OutsideDomain { x: f64, y: f64 },

    #[error("point ({x}, {y}) is not on the boundary")]
    NotOnBoundary { x: f64, y: f64 },

    #[error("outward normal undefined at rectangle corner ({x}, {y})")]
    Corner { x: f64, y: f64 },

    #[error("tangent ball radius {rho} not admissible (limit {limit})")]
    RadiusTooLarge { rho: f64, limit: f64 },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("negative gradient magnitude {0}")]
    NegativeMagnitude(f64),

    #[error("{method} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        method: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("solver aborted at t = {time}: {reason}")]
    SolverAbort { time: f64, reason: String },

    #[error(
        "monotonicity in j violated by {gap:e} between j = {j_lo} and j = {j_hi} at t = {time}"
    )]
    MonotonicityViolation {
        j_lo: u64,
        j_hi: u64,
        time: f64,
        gap: f64,
    },

    #[error("not enough interior nodes along the normal at ({x}, {y})")]
    TraceTooShort { x: f64, y: f64 },

    #[error("fit window holds {0} nodes, need at least 4")]
    FitWindowTooSmall(usize),

    #[error("cannot extrapolate blowup time: {0}")]
    NoBlowup(String),

    #[error("barrier supersolution inequality violated by {0:e}")]
    BarrierViolation(f64),

    #[error("constraint infeasible: {0}")]
    Infeasible(String),

    #[error("point ({x}, {y}) outside the subsolution ball")]
    OutsideBall { x: f64, y: f64 },

    #[error("threshold bracket not established: {0}")]
    NoBracket(String),

    #[error("classification not monotone in lambda: global at {global} above blowup at {blowup}")]
    NonMonotone { global: f64, blowup: f64 },

    #[error("amplitude sweep exhausted at {0} without loss")]
    SweepExhausted(f64),

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
