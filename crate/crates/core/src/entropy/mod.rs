//! Quantization, likelihoods, CDF tables and the range coder.

mod consts;

pub mod cdf;
pub mod likelihood;
pub mod prior;
pub mod quantize;
pub mod range_coder;

use thiserror::Error;

pub use cdf::{CdfCache, QuantizedCdfTable, PRECISION_BITS, TOTAL};
pub use likelihood::{gaussian_bin_likelihood, rate_bits, LIKELIHOOD_FLOOR};
pub use prior::FactorizedPrior;
pub use quantize::{quantize_infer, quantize_train, Quantized};
pub use range_coder::{range_decode, range_encode, RangeDecoder, RangeEncoder};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoderError {
    #[error("symbol {symbol} at position {index} outside alphabet [{min}, {max}]")]
    SymbolOutOfRange {
        index: usize,
        symbol: i32,
        min: i32,
        max: i32,
    },
    #[error("corrupt stream: decoded value out of range at byte offset {offset}")]
    Corrupt { offset: usize },
    #[error("truncated stream: read past end at byte offset {offset}")]
    Truncated { offset: usize },
    #[error("{count} unconsumed trailing bytes at byte offset {offset}")]
    TrailingBytes { offset: usize, count: usize },
}
