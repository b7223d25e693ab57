use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("interaction matrix is not symmetric at {path}")]
    AsymmetricMatrix { path: String },

    #[error("negative or non-finite entry at {path}")]
    NegativeEntry { path: String },

    #[error("initial density must be strictly positive and finite at {path}")]
    NonpositiveAlpha { path: String },

    #[error("interaction matrix is reducible: type {unreachable} cannot reach type 0 ({path})")]
    ReducibleMatrix { path: String, unreachable: usize },

    #[error("malformed model at {path}: {reason}")]
    Shape { path: String, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("enumerating sizes for k = {k}, nmax = {nmax} needs {count} entries (cap {cap})")]
    SizeOverflow {
        k: usize,
        nmax: usize,
        count: u128,
        cap: usize,
    },

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    /// Errors caused by bad input rather than by a numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::AsymmetricMatrix { .. }
                | Error::NegativeEntry { .. }
                | Error::NonpositiveAlpha { .. }
                | Error::ReducibleMatrix { .. }
                | Error::Shape { .. }
                | Error::Config(_)
                | Error::InvalidArgument(_)
        )
    }
}
