use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or state lies outside the domain of the requested operation.
    #[error("parameter domain: {0}")]
    Domain(String),

    /// The integrator could not continue; `state` is the last accepted state.
    #[error("integration failed at t = {t}: {reason}")]
    Integration {
        t: f64,
        state: Vec<f64>,
        reason: String,
    },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("root finding failed: {0}")]
    Root(String),

    #[error("continuation failed: {0}")]
    Continuation(String),

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("csv line {line}: {msg}")]
    Csv { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
