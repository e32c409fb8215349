use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("integrator failed at t = {t}: {reason}")]
    Integrator { t: f64, reason: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("tail not converged: {0}")]
    UnconvergedTail(String),

    #[error("jump time root finding failed at t = {t}")]
    RootFinding { t: f64 },

    #[error("missing input: {0}")]
    MissingInput(String),
}

impl Error {
    /// Attaches a location (for example a `(t, tau)` pair) to integrator failures.
    pub fn with_context(self, ctx: impl std::fmt::Display) -> Self {
        match self {
            Error::Integrator { t, reason } => Error::Integrator { t, reason: format!("{reason} ({ctx})") },
            other => other,
        }
    }
}
