use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("matrix is not square: {rows} rows, row {row} has {cols} columns")]
    NotSquare { rows: usize, row: usize, cols: usize },

    #[error("power iteration did not converge in {iterations} iterations (residual {residual:e}, best lambda {lambda})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        lambda: f64,
        vector: Vec<f64>,
    },

    #[error("power oracle sampled a non-positive quadratic form <X^p u, u> = {0:e}")]
    NonPositiveForm(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("step schedule violates `{law}` at t = {t}")]
    ScheduleViolation { law: &'static str, t: usize },

    #[error("iteration {t}: {source}")]
    AtIteration {
        t: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error on line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn at(self, t: usize) -> Self {
        Error::AtIteration {
            t,
            source: Box::new(self),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
