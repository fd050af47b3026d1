use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("plaintext out of range")]
    Domain,
    #[error("ciphertext does not decrypt under this key")]
    WrongKey,
    #[error("ciphertexts are under different public keys")]
    KeyMismatch,
    #[error("decode failure: {0}")]
    Decode(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("session aborted: {0}")]
    SessionAbort(String),
    #[error("fixture error: {0}")]
    Fixture(String),
}

pub type Result<T> = std::result::Result<T, Error>;
