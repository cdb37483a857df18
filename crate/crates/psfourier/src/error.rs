use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("model violation: {0}")]
    ModelViolation(String),
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("point at infinity of the chart")]
    PointAtInfinity,
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("group has not passed ping-pong validation")]
    NotValidated,
    #[error("series degenerate: {0}")]
    SeriesDegenerate(String),
    #[error("divergence: {0}")]
    Divergence(String),
    #[error("insufficient resolution: {0}")]
    InsufficientResolution(String),
    #[error("outside decomposition neighbourhood: {0}")]
    Decomposition(String),
}

impl Error {
    /// True for errors caused by bad input or a failed certificate, as opposed
    /// to numerical breakdown.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Dimension { .. } | Error::Validation(_) | Error::Configuration(_) | Error::NotValidated
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}
