//! Linear-algebra kernels shared by the pipeline.

pub mod banded;
pub mod dense;

pub use banded::{BandedLu, BandedMatrix};
