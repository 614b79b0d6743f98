//! Scalar abstraction: every numerical kernel in this crate is generic over
//! the working precision.

use std::fmt::{Display, LowerExp};
use std::str::FromStr;

/// Floating-point scalar the pipeline is generic over.
///
/// `nalgebra::RealField` supplies the arithmetic and elementary functions;
/// `num_traits::FromPrimitive` covers integer lifts; the formatting bounds
/// cover full-precision text round-tripping of datasets and rasters.
pub trait Scalar:
    nalgebra::RealField + num_traits::FromPrimitive + Copy + Display + LowerExp + FromStr + Send + Sync
{
    /// Lift an `f64` constant (tolerances, grid spacings, config values).
    fn of(x: f64) -> Self {
        nalgebra::convert(x)
    }

    /// Exact lift of a small count (node numbers, shift counts).
    fn of_usize(n: usize) -> Self {
        Self::of(n as f64)
    }

    /// Lossy report-side conversion for diagnostics and metrics.
    fn as_f64(self) -> f64 {
        nalgebra::try_convert(self).unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: nalgebra::RealField
        + num_traits::FromPrimitive
        + Copy
        + Display
        + LowerExp
        + FromStr
        + Send
        + Sync
{
}
