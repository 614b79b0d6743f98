//! Data-driven reduced-order-model inverse scattering with extension to
//! nonreciprocal (non-square) measurement arrays.
//!
//! The pipeline: synthesize spectral transfer-function data from a known
//! medium ([`forward`]), build the ROM from the symmetric data subset
//! ([`rom`]), orthogonalize it by block Lanczos ([`lanczos`]), generate
//! internal solutions on the grid from data only ([`internal`]), and solve
//! the extended Lippmann-Schwinger-Lanczos linear system for the unknown
//! coefficient ([`lsl`]). [`scenario`] wires the stages into reproducible
//! experiment runs behind the CLI.
//!
//! All numerical modules are generic over the scalar type through
//! [`scalar::Scalar`]; the concrete aliases below pin the default `f64`
//! precision used by the CLI and the bundled scenarios.

pub mod error;
pub mod forward;
pub mod grid;
pub mod internal;
pub mod lanczos;
pub mod linalg;
pub mod lsl;
pub mod rom;
pub mod scalar;
pub mod scenario;
pub mod spectral;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Working precision of the CLI and the bundled scenarios.
pub type Real = f64;

pub type Grid64 = grid::Grid<Real>;
pub type Medium64 = forward::Medium<Real>;
pub type FieldSet64 = forward::FieldSet<Real>;
pub type SpectralDataset64 = spectral::SpectralDataset<Real>;
pub type ArrayLayout64 = spectral::ArrayLayout<Real>;
pub type Rom64 = rom::Rom<Real>;
pub type LanczosFactorization64 = lanczos::LanczosFactorization<Real>;
pub type InternalFieldSet64 = internal::InternalFieldSet<Real>;
pub type LslSystem64 = lsl::LslSystem<Real>;
pub type ReconstructionResult64 = lsl::ReconstructionResult<Real>;
