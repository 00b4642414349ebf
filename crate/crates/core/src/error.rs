use thiserror::Error;

use crate::trace::Trace;

/// Errors raised by the framework types, problem builders, solvers and checkers.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter fell outside its admissible range.
    #[error("parameter `{name}` = {value} is outside the valid range {range}")]
    Parameter {
        name: String,
        value: String,
        range: String,
    },

    /// A value that must be finite was NaN or infinite.
    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    /// Dimensions of two operands do not agree.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: String,
        expected: usize,
        got: usize,
    },

    /// An operation's precondition on its input did not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The input (usually a trace) is malformed or lacks required data.
    #[error("invalid input: {0}")]
    Input(String),

    /// Backtracking did not find an acceptable step.
    #[error(
        "line search failed at iteration {iteration} after {halvings} halvings \
         (last step {last_step:e}, last value {last_value:e})"
    )]
    LineSearch {
        iteration: usize,
        halvings: usize,
        last_step: f64,
        last_value: f64,
        partial: Box<Trace>,
    },

    /// A user-supplied search direction violated its declared descent constants.
    #[error("direction at iteration {iteration} violates the descent condition: {detail}")]
    Direction { iteration: usize, detail: String },

    /// Fewer points than a fit or check requires.
    #[error("insufficient data: need at least {needed} points, have {have}")]
    InsufficientData { needed: usize, have: usize },

    /// The requested feature is outside what the library supports.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn param(name: &str, value: impl ToString, range: &str) -> Self {
        Error::Parameter {
            name: name.to_string(),
            value: value.to_string(),
            range: range.to_string(),
        }
    }

    pub(crate) fn non_finite(context: &str) -> Self {
        Error::NonFinite {
            context: context.to_string(),
        }
    }

    /// The partial trace carried by a line-search failure, if any.
    pub fn partial_trace(&self) -> Option<&Trace> {
        match self {
            Error::LineSearch { partial, .. } => Some(partial),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Range checks shared by parameter validation.
pub(crate) mod check {
    use super::{Error, Result};

    pub fn open_unit(name: &str, v: f64) -> Result<()> {
        if v > 0.0 && v < 1.0 {
            Ok(())
        } else {
            Err(Error::param(name, v, "(0,1)"))
        }
    }

    pub fn half_open_unit(name: &str, v: f64) -> Result<()> {
        if v > 0.0 && v <= 1.0 {
            Ok(())
        } else {
            Err(Error::param(name, v, "(0,1]"))
        }
    }

    pub fn unit_left_closed(name: &str, v: f64) -> Result<()> {
        if (0.0..1.0).contains(&v) {
            Ok(())
        } else {
            Err(Error::param(name, v, "[0,1)"))
        }
    }

    pub fn positive(name: &str, v: f64) -> Result<()> {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::param(name, v, "(0,inf)"))
        }
    }

    pub fn finite(context: &str, v: f64) -> Result<()> {
        if v.is_finite() {
            Ok(())
        } else {
            Err(Error::non_finite(context))
        }
    }
}
