use thiserror::Error;

/// Errors raised by the constitutive updates, the forward solvers and the
/// identification pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("return mapping did not converge (residual {residual:e})")]
    Solver { residual: f64 },

    #[error("state error: {0}")]
    State(String),

    #[error("contact violation: normal jump {jump:e} mm")]
    Contact { jump: f64 },

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("simulation failed after u = {last_u} mm: {reason}")]
    Simulation { last_u: f64, reason: String },

    #[error("u = {u} mm outside recorded range [0, {max}]")]
    Range { u: f64, max: f64 },

    #[error("degenerate weight calibration: {0}")]
    Calibration(String),

    #[error("surrogate fit failed: {0}")]
    Fit(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("reference data: {0}")]
    Reference(String),

    #[error("stage ordering: {0}")]
    Stage(String),

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
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
