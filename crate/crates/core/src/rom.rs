//! Data-driven reduced order model: mass, stiffness and input block built
//! from the symmetric data subset via the Loewner divided-difference
//! formulas, for SISO and block MIMO data alike.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectral::SpectralDataset;

/// SPD floor for the mass matrix: reject when
/// `lambda_min(M) < SPD_FLOOR_REL * lambda_max(M)`. Surfaces redundant shift
/// choices early; the construction assumes noiseless data.
pub const SPD_FLOOR_REL: f64 = 1e-12;

/// Galerkin system `(S + λ M) C = B` recovered purely from spectral data.
/// `mass` and `stiffness` are `m*K x m*K` in K x K blocks; `input` is
/// `m*K x K` with block j equal to the measured `F^σ(λ_j)`.
#[derive(Clone, Debug)]
pub struct Rom<F> {
    pub mass: DMatrix<F>,
    pub stiffness: DMatrix<F>,
    pub input: DMatrix<F>,
    pub lambdas: Vec<F>,
    pub block_size: usize,
}

impl<F: Scalar> Rom<F> {
    pub fn num_shifts(&self) -> usize {
        self.lambdas.len()
    }

    pub fn order(&self) -> usize {
        self.lambdas.len() * self.block_size
    }

    /// Debug dump of M, S, B in the matrix text format.
    pub fn dump(&self, dir: &std::path::Path) -> Result<()> {
        crate::spectral::io::save_matrix(&self.mass, &dir.join("rom_mass.txt"))?;
        crate::spectral::io::save_matrix(&self.stiffness, &dir.join("rom_stiffness.txt"))?;
        crate::spectral::io::save_matrix(&self.input, &dir.join("rom_input.txt"))?;
        Ok(())
    }
}

fn hard_symmetrize<F: Scalar>(m: &mut DMatrix<F>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)]) * F::of(0.5);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// The raw Loewner divided-difference blocks of a square dataset:
///
/// ```text
/// M_ij = (F(λ_i) - F(λ_j)) / (λ_j - λ_i)      M_ii = -dF(λ_i)
/// S_ij = (λ_j F(λ_j) - λ_i F(λ_i)) / (λ_j - λ_i)   S_ii = F(λ_i) + λ_i dF(λ_i)
/// B_j  = F(λ_j)
/// ```
///
/// Exposed separately from [`build_rom`] so the formulas stay checkable on
/// data that fails the SPD floor (redundant shift choices make M exactly
/// singular).
pub fn loewner_blocks<F: Scalar>(
    data: &SpectralDataset<F>,
) -> Result<(DMatrix<F>, DMatrix<F>, DMatrix<F>)> {
    if data.num_tx() != data.num_rx() {
        return Err(Error::Mismatch(format!(
            "ROM needs square data (K = L); got K={}, L={} — take symmetric_part first",
            data.num_tx(),
            data.num_rx()
        )));
    }
    let k = data.num_tx();
    let m = data.num_points();
    let order = m * k;
    let mut mass = DMatrix::zeros(order, order);
    let mut stiffness = DMatrix::zeros(order, order);
    let mut input = DMatrix::zeros(order, k);

    for i in 0..m {
        let pi = data.point(i);
        input.view_mut((i * k, 0), (k, k)).copy_from(&pi.f);
        for j in 0..m {
            let pj = data.point(j);
            let (mb, sb) = if i == j {
                let mb = -&pi.df;
                let sb = &pi.f + &pi.df * pi.lambda;
                (mb, sb)
            } else {
                let denom = pj.lambda - pi.lambda;
                let mb = (&pi.f - &pj.f) / denom;
                let sb = (&pj.f * pj.lambda - &pi.f * pi.lambda) / denom;
                (mb, sb)
            };
            mass.view_mut((i * k, j * k), (k, k)).copy_from(&mb);
            stiffness.view_mut((i * k, j * k), (k, k)).copy_from(&sb);
        }
    }
    hard_symmetrize(&mut mass);
    hard_symmetrize(&mut stiffness);
    Ok((mass, stiffness, input))
}

/// Build the ROM from the symmetric part of a dataset (`K = L`), enforcing
/// the SPD floor on the mass matrix.
pub fn build_rom<F: Scalar>(data: &SpectralDataset<F>) -> Result<Rom<F>> {
    let (mass, stiffness, input) = loewner_blocks(data)?;

    let (eigs, _) = crate::linalg::dense::sym_eigen(&mass);
    let lambda_min = eigs[0];
    let lambda_max = eigs[eigs.len() - 1];
    let floor = F::of(SPD_FLOOR_REL) * lambda_max;
    if !(lambda_min > floor && lambda_max > F::zero()) {
        return Err(Error::MassNotSpd {
            ratio: (lambda_min / lambda_max).as_f64(),
            floor: SPD_FLOOR_REL,
        });
    }

    Ok(Rom {
        mass,
        stiffness,
        input,
        lambdas: data.lambdas(),
        block_size: data.num_tx(),
    })
}

/// ROM transfer function `B^T (S + λ M)^{-1} B`; interpolates the data values
/// and derivatives at every shift.
pub fn rom_transfer<F: Scalar>(rom: &Rom<F>, lambda: F) -> Result<DMatrix<F>> {
    let pencil = &rom.stiffness + &rom.mass * lambda;
    let lu = pencil.lu();
    let x = lu.solve(&rom.input).ok_or(Error::SingularShift {
        lambda: lambda.as_f64(),
    })?;
    Ok(rom.input.transpose() * x)
}
