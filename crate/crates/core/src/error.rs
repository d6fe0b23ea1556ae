use std::path::PathBuf;

/// Errors produced by the device, circuit and runner layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{what} did not converge at {at}")]
    NonConvergence { what: &'static str, at: String },

    #[error("curves do not cross inside the sweep window: {0}")]
    NoCrossing(String),

    #[error("predicate not bracketed: {0}")]
    PredicateNotBracketed(String),

    #[error("no table rows inside current window [{lo:e}, {hi:e}] A")]
    WindowEmpty { lo: f64, hi: f64 },

    #[error("table never crosses the criterion current {0:e} A")]
    CriterionNotCrossed(f64),

    #[error("degenerate VTC: {0}")]
    DegenerateVtc(String),

    #[error("no oscillation detected: {0}")]
    NoOscillation(String),

    #[error("value {value:e} outside range [{lo:e}, {hi:e}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid config value for `{key}`: {constraint}")]
    Validation { key: String, constraint: String },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn non_convergence(what: &'static str, at: impl Into<String>) -> Self {
        Error::NonConvergence { what, at: at.into() }
    }

    /// Wraps the error with a human readable context line.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
