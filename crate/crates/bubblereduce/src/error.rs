use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDims(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),

    #[error("quadrature did not reach tolerance: estimate {estimate:e}, error estimate {err_est:e} after {boxes} boxes")]
    ToleranceFailure { estimate: f64, err_est: f64, boxes: usize },

    #[error("admissibility violated: {0}")]
    Admissibility(String),

    #[error("no convergence after {steps} steps; residual trace {trace:?}")]
    NoConvergence { steps: usize, trace: Vec<f64> },

    #[error("root on the box boundary at ({0}, {1})")]
    BoundaryRoot(f64, f64),

    #[error("inconclusive degree: {0}")]
    InconclusiveDegree(String),

    #[error("certificate failure: {0}")]
    Certificate(String),

    #[error("centers not separated enough: {0}")]
    NotSeparatedEnough(String),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    /// True for failures of an asserted certificate as opposed to bad input.
    pub fn is_certificate(&self) -> bool {
        matches!(
            self,
            Error::Certificate(_) | Error::InconclusiveDegree(_) | Error::NotSeparatedEnough(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
