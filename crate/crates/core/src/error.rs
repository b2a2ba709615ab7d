use thiserror::Error;

/// Errors shared by every module.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("{0}")]
    Domain(String),
    /// Exhaustive decoding would exceed the configured candidate cap.
    #[error("stage {stage}: candidate space needs at least {required} entries, cap is {cap}")]
    CapExceeded {
        stage: String,
        required: u64,
        cap: u64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
