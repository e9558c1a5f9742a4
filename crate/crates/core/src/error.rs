use thiserror::Error;

/// Errors produced by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A model parameter violates its invariant.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Adaptive quadrature ran out of subdivisions before meeting its tolerance.
    #[error("quadrature did not converge: estimate {value}, error estimate {abs_err:e}")]
    Convergence { value: f64, abs_err: f64 },

    /// A decoding-failure profile increases with the round index beyond the allowed slack.
    #[error("decoding profile not monotone at round {round}: {prev} -> {next}")]
    NonMonotone { round: usize, prev: f64, next: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
