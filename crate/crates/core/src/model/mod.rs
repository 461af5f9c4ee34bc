//! Model configuration and the dual-VAE transformer.

pub mod config;
pub mod vae;

pub use config::{ModelConfig, WindowSet};
pub use vae::{
    canonical_to_rows, kl_divergence, rows_to_canonical, CheckpointInfo, GaussianVars, VaeFormer, LOG_SCALE_CLAMP,
    SCALE_FLOOR,
};
