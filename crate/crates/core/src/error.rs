use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("capacity exceeded: {what} ({requested} > {limit})")]
    Capacity {
        what: &'static str,
        requested: u128,
        limit: u128,
    },

    #[error("feature index {index} out of range for {feature_count} features")]
    FeatureOutOfRange { index: usize, feature_count: usize },

    #[error("invalid value: {0}")]
    Invalid(String),

    #[error("round {got} recorded after round {last}; times must be strictly increasing")]
    NonMonotoneTime { last: u64, got: u64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: unknown {column} value `{value}`")]
    UnknownCategory {
        line: usize,
        column: &'static str,
        value: String,
    },

    #[error("not enough rows: need {needed}, have {available}")]
    InsufficientRows { needed: usize, available: usize },

    #[error("environment exhausted at round {round} ({rows} rows available)")]
    Exhausted { round: u64, rows: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{} configuration problem(s):\n{}", .0.len(), format_issues(.0))]
    Validation(Vec<crate::dataio::config::ConfigIssue>),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }

    /// True for configuration problems the user can fix by editing input.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Validation(_) | Error::Config(_))
    }
}

fn format_issues(issues: &[crate::dataio::config::ConfigIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("  {i}"))
        .collect::<Vec<_>>()
        .join("\n")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
