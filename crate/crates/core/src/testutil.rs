//! Shared closed-form oracles for unit tests.

use nalgebra::DMatrix;

use crate::scalar::Scalar;
use crate::spectral::{SpectralDataset, SpectralPoint};

/// Transfer function of a diagonal operator with the given poles and positive
/// residues: `F(λ) = Σ c_k / (a_k + λ)`, `dF(λ) = -Σ c_k / (a_k + λ)^2`.
/// With at least as many poles as shifts the snapshot space has full rank and
/// the Loewner mass matrix is SPD.
pub fn pole_dataset<F: Scalar>(poles: &[(f64, f64)], lambdas: &[f64]) -> SpectralDataset<F> {
    let points = lambdas
        .iter()
        .map(|&l| {
            let mut f = 0.0;
            let mut df = 0.0;
            for &(a, c) in poles {
                f += c / (a + l);
                df -= c / ((a + l) * (a + l));
            }
            SpectralPoint {
                lambda: F::of(l),
                f: DMatrix::from_element(1, 1, F::of(f)),
                df: DMatrix::from_element(1, 1, F::of(df)),
            }
        })
        .collect();
    SpectralDataset::new(points, 1, 1).unwrap()
}

/// Five well-separated poles; supports up to five shifts with an SPD mass.
pub const FIVE_POLES: [(f64, f64); 5] = [
    (0.5, 1.0),
    (3.0, 0.6),
    (10.0, 0.3),
    (40.0, 0.15),
    (200.0, 0.075),
];

/// Evaluate the pole-oracle transfer function directly.
pub fn pole_transfer(poles: &[(f64, f64)], lambda: f64) -> f64 {
    poles.iter().map(|&(a, c)| c / (a + lambda)).sum()
}
