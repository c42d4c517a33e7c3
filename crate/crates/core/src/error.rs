use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the numerical core and the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An operation that divides by the detection rate was called with
    /// `delta = 0`; callers must opt into the detection-free mode instead.
    #[error("detection-free mode (delta = 0) unsupported here: {0}")]
    DetectionFree(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("invalid stop condition: {0}")]
    InvalidStop(String),

    /// A failure inside one replicate of a batch, tagged with its index.
    #[error("replicate {index}: {source}")]
    Replicate {
        index: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn in_replicate(self, index: u64) -> Error {
        Error::Replicate {
            index,
            source: Box::new(self),
        }
    }
}
