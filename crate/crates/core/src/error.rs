use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the solver and reporting layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("no sample points supplied")]
    EmptySamples,
    #[error("potential evaluated to a non-finite value at {0:?}")]
    NonFiniteEvaluation(Vec<f64>),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("step size underflow at x = {x} (h = {h:e})")]
    StepSizeUnderflow { x: f64, h: f64 },
    #[error("non-finite ODE coefficient at x = {0}")]
    NonFiniteCoefficient(f64),
    #[error("operation requires a radial form")]
    NotRadial,
    #[error("miss-distance vanishes on the contour near {0}")]
    ZeroOnContour(Complex64),
    #[error("phase resolution exceeded near {0}")]
    PhaseResolutionExceeded(Complex64),
    #[error("root polishing did not converge in box centred at {0}")]
    NonConvergence(Complex64),
    #[error("{0} is not an eigenvalue (normalised miss-distance {1:e})")]
    NotAnEigenvalue(Complex64, f64),
    #[error("eigenfunction matching failed: {0}")]
    MatchFailure(String),
    #[error("trajectory too short for classification ({0} records)")]
    TooShort(usize),
    #[error("insufficient data for rate fit ({0} usable points)")]
    InsufficientData(usize),
    #[error("mesh too coarse: n = {0}")]
    MeshTooCoarse(usize),
    #[error("interface site {0} is farther than h/2 from every mesh node")]
    SiteOffMesh(f64),
    #[error("pivot breakdown in banded LU at shift {0}")]
    PivotBreakdown(Complex64),
    #[error("iteration cap exceeded; best estimate {0:e}")]
    IterationCapExceeded(f64),
    #[error("empty point set")]
    EmptySet,
    #[error("1-D eigenvalue list cannot certify the window: {0}")]
    WindowNotCovered(String),
    #[error("angular index cap {0} reached with eigenvalues still in the window")]
    LMaxExceeded(u32),
    #[error("unknown trajectory id {0}")]
    UnknownTrajectory(usize),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
