use std::path::PathBuf;

use thiserror::Error;

use crate::copula::CopulaFamily;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{family} parameter theta={theta} outside admissible range [{lower}, {upper}]")]
    ParameterOutOfRange {
        family: CopulaFamily,
        theta: f64,
        lower: f64,
        upper: f64,
    },

    #[error("{what}={value} outside its domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("need at least {required} observations, got {actual}")]
    InsufficientData { required: usize, actual: usize },

    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error("non-finite value at index {index}: {detail}")]
    NonFinite { index: usize, detail: String },

    #[error("log-likelihood is not finite at point {index} (u={u}, v={v}) for theta={theta}")]
    NonFiniteLikelihood {
        index: usize,
        u: f64,
        v: f64,
        theta: f64,
    },

    #[error("sampler diverged at step {step}")]
    Diverged { step: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: {count} non-finite value(s) in input")]
    NonFiniteInput { path: PathBuf, count: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    /// Process exit status for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Parse { .. }
            | Error::NonFiniteInput { .. }
            | Error::Io { .. }
            | Error::InsufficientData { .. }
            | Error::NonFinite { .. } => 2,
            Error::ParameterOutOfRange { .. } | Error::Domain { .. } => 1,
            Error::Degenerate(_) | Error::NonFiniteLikelihood { .. } | Error::Diverged { .. } => 3,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
