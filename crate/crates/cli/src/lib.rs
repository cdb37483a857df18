//! Experiment runner behind the `pslab` binary.

pub mod commands;
pub mod config;
pub mod groupfile;
pub mod output;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    /// 2 for bad input or a failed certificate, 3 for numerical failure, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<psfourier::Error> for CliError {
    fn from(e: psfourier::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

impl From<groupfile::ParseError> for CliError {
    fn from(e: groupfile::ParseError) -> Self {
        CliError::Validation(e.to_string())
    }
}
