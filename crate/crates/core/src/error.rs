use thiserror::Error;

/// Errors produced anywhere in the link chain.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    Length { expected: usize, actual: usize },

    /// Bit count does not fill whole constellation symbols.
    #[error("framing error: {0}")]
    Framing(String),

    /// Serialized tensor header could not be parsed after decoding.
    #[error("frame error: {0}")]
    Frame(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("similarity undefined for a zero-norm vector")]
    UndefinedSimilarity,

    /// Failure talking to a semantic codec, never caused by channel noise.
    #[error("transport error: {0}")]
    Transport(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
