//! Window and global multi-head attention, assembled into ACT stages.

pub mod block;
pub mod mha;
pub mod window;

pub use block::{ActStage, AttentionBlock};
pub use mha::{attention, MultiHeadAttention};
pub use window::{window_merge, window_partition, WindowKind, WindowSpec};
