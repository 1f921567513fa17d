//! Error types shared across the crate.

use std::path::PathBuf;

use crate::estimators::IdentifiabilityViolation;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Mismatched or otherwise invalid arguments (dimension conflicts, bad modes,
    /// malformed sweep parameters).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Input that makes the requested operation meaningless (all-zero matrix for a
    /// rank-1 approximation, zero tensor for SNR calibration).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// A specific column of the input carries no information.
    #[error("degenerate column {index}: {reason}")]
    DegenerateColumn { index: usize, reason: String },

    /// A least-squares system lost full column rank.
    #[error(
        "rank-deficient system in {context}: smallest singular value {smallest:.6e} \
         is below the tolerance {threshold:.6e}"
    )]
    RankDeficient {
        context: String,
        smallest: f64,
        threshold: f64,
    },

    /// Training dimensions do not satisfy the requested estimator's identifiability
    /// requirements.
    #[error(transparent)]
    Identifiability(#[from] IdentifiabilityViolation),

    /// The supplied training matrices do not match the orthogonality assumptions of
    /// the requested computation path.
    #[error("design mismatch: {0}")]
    DesignMismatch(String),

    /// A numerical routine failed to converge.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Invalid sweep configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Filesystem failure, with the offending path.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
