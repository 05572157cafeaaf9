//! Crate-wide error type and the process exit codes the CLI maps it to.

/// Errors surfaced by the library and the CLI.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed identifiers, bad parameters, unknown config keys.
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed external input data (CSV signals, config files).
    #[error("input error: {0}")]
    Input(String),

    /// Quadrature or series evaluation failed to meet its tolerance budget.
    #[error("numerical error: {msg}")]
    Numerical {
        msg: String,
        /// Best estimate reached before giving up, when one exists.
        best: Option<f64>,
    },

    /// The integrand produced a non-finite value (overflow of `φ(|g|)`).
    #[error("non-finite integrand encountered near x = {at}")]
    NonFiniteIntegrand { at: f64 },

    /// A function is not in the requested Orlicz space (no λ gives a finite
    /// modular).
    #[error("membership error: {0}")]
    Membership(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn numerical(msg: impl Into<String>, best: Option<f64>) -> Self {
        Error::Numerical { msg: msg.into(), best }
    }

    /// CLI exit code: 2 for configuration/input problems, 3 for numerical
    /// failures. Verdict failures (exit 1) are not errors and are handled by
    /// the CLI directly.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Input(_) | Error::Json(_) => 2,
            Error::Numerical { .. }
            | Error::NonFiniteIntegrand { .. }
            | Error::Membership(_)
            | Error::Io(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
