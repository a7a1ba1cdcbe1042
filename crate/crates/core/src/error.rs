use thiserror::Error;

/// Errors raised by the commitment, coding and encryption layers.
///
/// Verification failures are not errors: verifiers return a
/// [`Verdict`](crate::Verdict) instead.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("polynomial division left a nonzero remainder")]
    NotDivisible,

    #[error("polynomial of degree {degree} exceeds reference string capacity {max}")]
    DegreeTooLarge { degree: usize, max: usize },

    #[error("malformed encoding: {0}")]
    Encoding(String),

    #[error("reference string failed its pairing consistency check")]
    InconsistentCrs,

    #[error("codeword contains erased positions; detection needs a full word")]
    ErasuresPresent,

    #[error("the transparent proof backend only runs in test-only sessions")]
    TestOnlyBackend,

    #[error("proof backend `{0}` is not available")]
    BackendUnavailable(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn encoding(msg: impl Into<String>) -> Self {
        Error::Encoding(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
