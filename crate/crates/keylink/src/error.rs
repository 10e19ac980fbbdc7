use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("instance too large: {0}")]
    TooLarge(String),
    #[error("graph error: {0}")]
    Graph(String),
    #[error("key derivation error: {0}")]
    Kdf(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
