//! End-to-end compression and the container format.

pub mod codec;
pub mod container;

pub use codec::{
    compress, compress_factorized, decompress, fit_factorized_prior, quantized_latent, reconstruct_quantized,
    CompressReport, Compressed, CLAMP_WARN_FRACTION,
};
pub use container::{CodingMode, Container};
