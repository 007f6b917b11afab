use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the numerical routines and the data pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("interval [{a1}, {a2}] violates the Jánossy constraint a1 < 0 < a2, a2 - a1 < 2π")]
    InvalidInterval { a1: f64, a2: f64 },

    #[error("argument outside the series domain: {0}")]
    SeriesDomain(String),

    #[error("singular phase at a = {0}")]
    SingularPhase(f64),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("integrator failure at s = {at}: {reason}")]
    Integration { at: f64, reason: String },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("underdetermined fit: {0}")]
    Underdetermined(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("incompatible binning: {0}")]
    Binning(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}:{line}: ordinates not strictly increasing")]
    NonMonotone { path: PathBuf, line: usize },

    #[error("window out of range: {0}")]
    Window(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics rather than of inputs or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularPhase(_)
                | Error::NonFinite(_)
                | Error::Integration { .. }
                | Error::Quadrature(_)
                | Error::Underdetermined(_)
        )
    }

    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::Io(_) | Error::Json(_) | Error::Parse { .. } | Error::NonMonotone { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
