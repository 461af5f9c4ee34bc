//! Minimal dense tensors with reverse-mode automatic differentiation.
//!
//! Forward ops are recorded on a [`Graph`]; [`Graph::backward`] sweeps the
//! record once in reverse. Model parameters live in a [`ParamStore`] and are
//! bound into a graph through a [`Tape`]. Everything is generic over
//! [`Real`] so the same code runs in `f32` for training and `f64` for
//! gradient verification.

pub mod checkpoint;
mod error;
pub mod gradcheck;
mod graph;
pub mod kernels;
mod params;
mod real;
mod tensor;

pub use checkpoint::Checkpoint;
pub use error::{Result, TensorError};
pub use graph::{Gradients, Graph, Var};
pub use params::{Param, ParamGrads, ParamId, ParamStore, Tape};
pub use real::Real;
pub use tensor::Tensor;
