//! Experiment runner and file-format front end for `hoe`.
//!
//! The binary is a thin layer over this library: configs are parsed and
//! validated by [`config`], experiments in [`experiments`] return
//! [`report::ResultRow`]s, and [`report::write_rows`] renders them as CSV.

pub mod config;
pub mod experiments;
pub mod report;

/// Exit code for bad input (arguments, configs, files).
pub const EXIT_VALIDATION: i32 = 2;
/// Exit code for numeric failures (overflow, failed reconstruction, ...).
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

impl From<hoe::Error> for CliError {
    fn from(e: hoe::Error) -> Self {
        if e.is_numeric() {
            CliError::Numeric(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(format!("i/o: {e}"))
    }
}
