//! CLI error wrapper and exit-code mapping.
//!
//! Exit codes: usage errors 2 (raised by the argument parser), validation 3,
//! numeric failures 4, I/O 5.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Rejected input: bad config key, bad flag value, malformed event file.
    Validation(String),
    /// Computation failed inside an accepted parameter regime.
    Numeric(String),
    /// File could not be read or written.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 3,
            CliError::Numeric(_) => 4,
            CliError::Io(_) => 5,
        }
    }

    pub fn class(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Numeric(_) => "numeric",
            CliError::Io(_) => "io",
        }
    }

    pub fn io(context: &str, err: std::io::Error) -> Self {
        CliError::Io(format!("{context}: {err}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Numeric(m) | CliError::Io(m) => write!(f, "{m}"),
        }
    }
}

impl From<aoi_core::Error> for CliError {
    fn from(e: aoi_core::Error) -> Self {
        use aoi_core::Error::*;
        match &e {
            Validation { .. }
            | Argument(_)
            | Interval { .. }
            | Event(_)
            | Instability(_)
            | TotalLoss
            | NoDelivery(_)
            | Domain(_) => CliError::Validation(e.to_string()),
            Evaluation { .. }
            | ParameterRegime { .. }
            | SingularCorrelation(_)
            | AbsorbingStates
            | Divergence { .. }
            | UnboundedIntensity(_) => CliError::Numeric(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
