use thiserror::Error;

use crate::quadrature::QuadratureError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain where the formula is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature failed at Omega = {omega:.6e} rad/s: {source}")]
    Window {
        omega: f64,
        #[source]
        source: QuadratureError,
    },

    #[error(transparent)]
    Quadrature(#[from] QuadratureError),

    #[error("reconstruction refused: {reason}")]
    Reconstruction { reason: String, ratio: Option<f64> },

    #[error("config parse error: {0}")]
    Parse(String),

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::Validation(_) | Error::Domain(_) => 2,
            Error::Window { .. } | Error::Quadrature(_) => 3,
            Error::Reconstruction { .. } => 4,
            Error::Io(_) => 1,
        }
    }
}
