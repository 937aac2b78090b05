use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates the precondition of the operation it was passed to.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two vortices coincide (or come closer than the separation guard).
    #[error("singular configuration: {0}")]
    Singular(String),

    /// The requested grid cannot resolve the vortex cores.
    #[error("grid too coarse: spacing {spacing:.4e} exceeds the required {required:.4e}")]
    GridTooCoarse { spacing: f64, required: f64 },

    #[error("not converged after {iterations} iterations: {detail}")]
    NonConvergence { iterations: usize, detail: String },

    #[error("malformed input: {0}")]
    Format(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
