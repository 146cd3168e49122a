use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoreError {
    #[error("random source failure: {0}")]
    Entropy(String),
    #[error("key length {actual} does not match crypto spec ({expected} bytes)")]
    KeyLength { expected: usize, actual: usize },
    #[error("invalid crypto spec: {0}")]
    CryptoSpec(String),
    #[error("invalid name {0:?}: {1}")]
    Name(String, &'static str),
    #[error("invalid nonce: {0}")]
    Nonce(String),
    #[error("invalid hex encoding: {0}")]
    Hex(String),
    #[error("invalid validity window: {0}")]
    Validity(String),
}
