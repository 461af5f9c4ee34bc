use thiserror::Error;

use crate::entropy::CoderError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Tensor(#[from] cvc_tensor::TensorError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("grid file: {msg} (offset {offset})")]
    GridFile { offset: usize, msg: String },
    #[error("container: {0}")]
    Container(String),
    #[error(transparent)]
    Coder(#[from] CoderError),
    #[error("configuration: {0}")]
    Config(String),
    #[error("data: {0}")]
    Data(String),
    #[error("hash mismatch for {what}: expected {expected:016x}, found {found:016x}")]
    HashMismatch {
        what: &'static str,
        expected: u64,
        found: u64,
    },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
