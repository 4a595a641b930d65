use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("placement error: {0}")]
    Placement(String),

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("element {element} inverted by deformation (volume {volume:.3e} mm^3)")]
    InvertedElement { element: usize, volume: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("dataset has {found} rows, expected {expected}")]
    DatasetSize { expected: usize, found: usize },

    #[error("missing artifacts for models: {}", .0.join(", "))]
    MissingArtifacts(Vec<String>),

    #[error("malformed {what}: {detail}")]
    Format { what: String, detail: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(what: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Format {
            what: what.into(),
            detail: detail.into(),
        }
    }

    /// True for errors raised by the linear solvers or the deformation step.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. } | Error::Singular(_) | Error::InvertedElement { .. }
        )
    }
}
