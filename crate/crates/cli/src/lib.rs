//! Batch runner around `zhd-core`: run a configured experiment, or check an existing trace.

pub mod commands;
pub mod config;
pub mod error;
pub mod trace_io;

pub use commands::{CheckArgs, Outcome};
pub use error::{CliError, CliResult};
