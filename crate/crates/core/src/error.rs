use thiserror::Error;

/// Errors produced by the engines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A configured size cap would be exceeded.
    #[error("resource limit exceeded: {what} requires {requested}, cap is {cap}")]
    Resource {
        what: &'static str,
        requested: u128,
        cap: u128,
    },

    /// A model cannot supply what the coupling construction needs.
    #[error("model error: {0}")]
    Model(String),

    /// An internal or structural invariant failed at runtime.
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// Malformed textual input.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn resource(
        what: &'static str,
        requested: impl Into<u128>,
        cap: impl Into<u128>,
    ) -> Self {
        Error::Resource {
            what,
            requested: requested.into(),
            cap: cap.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
