use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value {value} passed to modular evaluation")]
    NonFinite { value: f64 },

    #[error("modular value overflowed at u = {value}")]
    Overflow { value: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("range error: {coordinate} overflowed while forming the radical argument")]
    Range { coordinate: &'static str },

    #[error("approximant became non-finite at n = {n}")]
    Saturated { n: u32 },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("regime error: {0}")]
    Regime(String),

    #[error("tail unknown: control function has no known geometric decay")]
    TailUnknown,

    #[error("precondition failed: {message}")]
    Precondition {
        message: String,
        worst_triple: [f64; 3],
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors produced by the textual parsers (modular specs, expressions, control functions).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at byte {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(offset: usize, message: impl Into<String>) -> Self {
        ParseError {
            offset,
            message: message.into(),
        }
    }
}
