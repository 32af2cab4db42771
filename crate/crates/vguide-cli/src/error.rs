//! Errors of the command-line front end and their exit codes.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid configuration or flags.
    #[error("configuration error: {0}")]
    Config(String),
    /// An error raised by the numerical library.
    #[error(transparent)]
    Library(#[from] vguide::error::Error),
    /// The run completed but a certificate verdict is negative.
    #[error("certificate not achieved: {0}")]
    NotAchieved(String),
    /// Output files could not be written.
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    /// 2 for configuration problems, 3 for numerical failures, 4 for
    /// certificates that were not achieved.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Output(_) => 2,
            CliError::Library(e) if e.is_input() => 2,
            CliError::Library(_) => 3,
            CliError::NotAchieved(_) => 4,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_contract() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::Library(vguide::error::Error::Domain("x".into())).exit_code(), 2);
        assert_eq!(CliError::Library(vguide::error::Error::Consistency("x".into())).exit_code(), 3);
        assert_eq!(CliError::NotAchieved("x".into()).exit_code(), 4);
    }
}
