pub mod attention;
pub mod cli;
pub mod codec;
pub mod data;
pub mod entropy;
pub mod error;
pub mod experiment;
pub mod hash;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod train;

pub use error::{Error, Result};
