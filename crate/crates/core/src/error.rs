use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max deviation {max_deviation:e})")]
    NotHermitian { max_deviation: f64 },

    #[error("invalid quantum state: {0}")]
    InvalidState(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("trace has imaginary residue {residue:e} above tolerance")]
    NumericConsistency { residue: f64 },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("objective returned {value} at parameters {params:?}")]
    NonFiniteObjective { value: f64, params: Vec<f64> },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("no bracketed minimum for J in [{lo}, {hi}] K")]
    FitRange { lo: f64, hi: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}, line {line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
