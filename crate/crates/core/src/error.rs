use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the solver, its diagnostics and the I/O layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("ensemble is empty: every cell weight fell below the drop threshold")]
    EmptyEnsemble,

    #[error("pair distance is undefined for fewer than two particles")]
    UndefinedDistance,

    #[error("BKW solution is not positive at t = {t}: K = {k} is outside [{k_min}, 1]")]
    BkwDomain { t: f64, k: f64, k_min: f64 },

    #[error("reference norm is zero; relative error is undefined")]
    UndefinedRelative,

    #[error("convergence fit needs at least 3 strictly positive points: {0}")]
    FitDomain(String),

    #[error("kernel expansion requested inside the near field (|x - y_c| = {0:e})")]
    NearField(f64),

    #[error("non-finite velocity for particle {particle} at step {step}")]
    BlowUp { particle: usize, step: usize },

    #[error("{count} particle(s) left the domain at step {step} (max overshoot {overshoot:e})")]
    DomainEscape {
        step: usize,
        count: usize,
        overshoot: f64,
    },

    #[error("unknown configuration key(s): {}", .0.join(", "))]
    UnknownKeys(Vec<String>),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("run at n = {n} failed: {source}")]
    Resolution {
        n: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
