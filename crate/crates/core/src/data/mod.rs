//! Grid tensors, the GRD1 file format, normalisation and synthetic data.

pub mod grid;
pub mod gridfile;
pub mod stats;
pub mod synthetic;

pub use grid::{regular_coordinates, GridTensor};
pub use stats::{compute_stats, NormStats, StatsAccumulator};
pub use synthetic::{generate, read_split, Dataset, Split, SyntheticSpec};
