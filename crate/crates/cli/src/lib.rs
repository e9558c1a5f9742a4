//! Sweeps, validation and dataset emission on top of `rffso-core`.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod gain;
pub mod output;
pub mod presets;
pub mod sweep;
pub mod validate;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("out of range: {0}")]
    Range(String),
    #[error(transparent)]
    Core(#[from] rffso_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("validation failed")]
    ValidationFailed,
    #[error("numeric convergence failure in {0} row(s)")]
    Convergence(usize),
}

impl CliError {
    /// 1 validation failure, 2 usage or config, 3 numeric convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ValidationFailed => 1,
            CliError::Convergence(_) | CliError::Core(rffso_core::Error::Convergence { .. }) => 3,
            _ => 2,
        }
    }
}
