//! M-symmetric (block) Lanczos tridiagonalization of `A = M^{-1} S` with
//! starting block `M^{-1} B`, producing the block-tridiagonal `T` and the
//! M-orthonormal coefficient basis `Q`.
//!
//! Internally the recurrence runs in Cholesky coordinates `y = L^T q` (with
//! `M = L L^T`), where M-orthogonality is plain Euclidean orthogonality; the
//! basis is mapped back through `L^{-T}` at the end. This reuses a single
//! dense factorization of M for every `M^{-1}` application and keeps
//! `Q^T M Q - I` at rounding level. Full reorthogonalization (two
//! Gram-Schmidt sweeps against all previous block columns) runs at every
//! step.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::dense::sym_sqrt_inv;
use crate::rom::Rom;
use crate::scalar::Scalar;

/// Eigenvalue floor (relative to the trace) for the symmetric square root of
/// `B^T M^{-1} B`.
pub const R0_EIG_FLOOR_REL: f64 = 1e-13;

/// Relative floor for diagonal entries of the QR factor of a new block;
/// below it the block is numerically deficient and the recurrence breaks
/// down.
pub const BREAKDOWN_FLOOR_REL: f64 = 1e-13;

/// Full m-step factorization `M^{-1} S Q = Q T`, `Q^T M Q = I`, with
/// `q_1 = M^{-1} B R0^{-1}` and `R0 = (B^T M^{-1} B)^{1/2}`.
#[derive(Clone, Debug)]
pub struct LanczosFactorization<F> {
    pub t: DMatrix<F>,
    pub q: DMatrix<F>,
    pub r0: DMatrix<F>,
    pub block_size: usize,
    pub num_blocks: usize,
}

impl<F: Scalar> LanczosFactorization<F> {
    pub fn order(&self) -> usize {
        self.block_size * self.num_blocks
    }

    /// `E_1 R0`: the right-hand side of the reduced shifted system.
    fn input_block(&self) -> DMatrix<F> {
        let mut e = DMatrix::zeros(self.order(), self.block_size);
        e.view_mut((0, 0), (self.block_size, self.block_size))
            .copy_from(&self.r0);
        e
    }

    /// Coefficient block `(T + λ I)^{-1} E_1 R0` of the reduced state.
    pub fn reduced_solve(&self, lambda: F) -> Result<DMatrix<F>> {
        Ok(self.reduced_resolvent_powers(lambda)?.0)
    }

    /// `((T + λ)^{-1} E_1 R0, (T + λ)^{-2} E_1 R0)` from one factorization;
    /// the second power drives the λ-derivative of internal solutions.
    pub fn reduced_resolvent_powers(&self, lambda: F) -> Result<(DMatrix<F>, DMatrix<F>)> {
        let shifted = &self.t + DMatrix::identity(self.order(), self.order()) * lambda;
        let lu = shifted.lu();
        let x1 = lu.solve(&self.input_block()).ok_or(Error::SingularShift {
            lambda: lambda.as_f64(),
        })?;
        let x2 = lu.solve(&x1).ok_or(Error::SingularShift {
            lambda: lambda.as_f64(),
        })?;
        Ok((x1, x2))
    }
}

/// Run the full m-step block Lanczos recurrence on a ROM.
///
/// The recurrence is preceded by a symmetric diagonal scaling of (M, S, B).
/// Scaling the snapshot basis leaves T, R0 and every reconstructed field
/// invariant while flattening the scale spread across shifts, which is what
/// keeps the orthogonality residuals near rounding level.
pub fn block_lanczos<F: Scalar>(rom: &Rom<F>) -> Result<LanczosFactorization<F>> {
    let k = rom.block_size;
    let m = rom.num_shifts();
    let order = rom.order();

    let mut d = DMatrix::zeros(order, order);
    for i in 0..order {
        let mii = rom.mass[(i, i)];
        if !(mii > F::zero()) {
            return Err(Error::MassNotSpd {
                ratio: mii.as_f64(),
                floor: crate::rom::SPD_FLOOR_REL,
            });
        }
        d[(i, i)] = F::one() / mii.sqrt();
    }
    let mass_scaled = &d * &rom.mass * &d;
    let stiffness_scaled = &d * &rom.stiffness * &d;
    let input_scaled = &d * &rom.input;

    let chol = nalgebra::Cholesky::new(mass_scaled).ok_or(Error::MassNotSpd {
        ratio: 0.0,
        floor: crate::rom::SPD_FLOOR_REL,
    })?;
    let l = chol.l();

    // Cholesky coordinates: A~ = L^{-1} S L^{-T}, start block C = L^{-1} B
    let c = l
        .solve_lower_triangular(&input_scaled)
        .ok_or(Error::Singular)?;
    let w0 = c.transpose() * &c;
    let (r0, r0_inv) =
        sym_sqrt_inv(&w0, R0_EIG_FLOOR_REL).map_err(|_| Error::LanczosBreakdown { step: 0 })?;
    let y1 = &c * &r0_inv;

    let apply_reduced = |y: &DMatrix<F>| -> Result<DMatrix<F>> {
        let t1 = l.tr_solve_lower_triangular(y).ok_or(Error::Singular)?;
        let t2 = &stiffness_scaled * t1;
        l.solve_lower_triangular(&t2).ok_or(Error::Singular)
    };

    let mut blocks: Vec<DMatrix<F>> = vec![y1];
    let mut alphas: Vec<DMatrix<F>> = Vec::with_capacity(m);
    let mut betas: Vec<DMatrix<F>> = Vec::with_capacity(m.saturating_sub(1));
    let mut scale = F::zero();

    for step in 0..m {
        let y_cur = blocks[step].clone();
        let ay = apply_reduced(&y_cur)?;
        let alpha_raw = y_cur.transpose() * &ay;
        let alpha = (&alpha_raw + alpha_raw.transpose()) * F::of(0.5);
        scale = scale.max(alpha.norm());

        if step + 1 == m {
            alphas.push(alpha);
            break;
        }

        let mut z = ay - &y_cur * &alpha;
        if step > 0 {
            z -= &blocks[step - 1] * betas[step - 1].transpose();
        }
        // full reorthogonalization, two sweeps
        for _ in 0..2 {
            for y_prev in &blocks {
                let coef = y_prev.transpose() * &z;
                z -= y_prev * coef;
            }
        }

        let qr = z.qr();
        let beta = qr.r();
        let min_diag = (0..k)
            .map(|i| beta[(i, i)].abs())
            .fold(F::of(f64::INFINITY), |a, b| a.min(b));
        scale = scale.max(beta.norm());
        if min_diag <= F::of(BREAKDOWN_FLOOR_REL) * scale {
            return Err(Error::LanczosBreakdown { step: step + 1 });
        }

        alphas.push(alpha);
        betas.push(beta);
        blocks.push(qr.q());
    }

    let mut t = DMatrix::zeros(order, order);
    for (i, alpha) in alphas.iter().enumerate() {
        t.view_mut((i * k, i * k), (k, k)).copy_from(alpha);
    }
    for (i, beta) in betas.iter().enumerate() {
        t.view_mut(((i + 1) * k, i * k), (k, k)).copy_from(beta);
        t.view_mut((i * k, (i + 1) * k), (k, k))
            .copy_from(&beta.transpose());
    }

    let mut y = DMatrix::zeros(order, order);
    for (i, b) in blocks.iter().enumerate() {
        y.view_mut((0, i * k), (order, k)).copy_from(b);
    }
    // back to the original coordinates: Q = D L^{-T} Y
    let q = &d * l.tr_solve_lower_triangular(&y).ok_or(Error::Singular)?;

    Ok(LanczosFactorization {
        t,
        q,
        r0,
        block_size: k,
        num_blocks: m,
    })
}

/// Free-function form of [`LanczosFactorization::reduced_solve`].
pub fn reduced_solve<F: Scalar>(f: &LanczosFactorization<F>, lambda: F) -> Result<DMatrix<F>> {
    f.reduced_solve(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dense::{pencil_eigenvalues, sym_eigen};
    use crate::rom::{build_rom, rom_transfer, Rom};
    use crate::testutil::{pole_dataset, FIVE_POLES};

    fn synthesized_rom_2d() -> Rom<f64> {
        use crate::forward::{synthesize_dataset, Medium};
        use crate::grid::Grid;
        use crate::spectral::ArrayLayout;
        use nalgebra::DVector;

        let grid = Grid::rect([1.0, 1.0], [15, 15]).unwrap();
        let n = grid.num_nodes();
        let p = DVector::from_fn(n, |i, _| if i % 7 == 0 { 1.5 } else { 0.0 });
        let medium = Medium::new(grid, p).unwrap();
        let layout = ArrayLayout::new(
            vec![[0.2, 0.0], [0.8, 0.0]],
            vec![[0.2, 0.0], [0.8, 0.0]],
            0.0,
        )
        .unwrap();
        let d = synthesize_dataset(&medium, &layout, &[1.0, 4.0, 16.0, 64.0]).unwrap();
        build_rom(&d.symmetric_part()).unwrap()
    }

    fn check_invariants(rom: &Rom<f64>, f: &LanczosFactorization<f64>) {
        let order = f.order();
        let qtmq = f.q.transpose() * &rom.mass * &f.q;
        let orth = (&qtmq - DMatrix::identity(order, order)).norm();
        assert!(orth <= 1e-10, "Q^T M Q - I = {orth}");

        let chol = nalgebra::Cholesky::new(rom.mass.clone()).unwrap();
        let aq = chol.solve(&(&rom.stiffness * &f.q));
        let resid = (&aq - &f.q * &f.t).norm() / aq.norm();
        assert!(resid <= 1e-9, "M^-1 S Q - Q T = {resid}");

        let (t_eigs, _) = sym_eigen(&f.t);
        let p_eigs = pencil_eigenvalues(&rom.stiffness, &rom.mass).unwrap();
        let scale = p_eigs.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
        for i in 0..order {
            assert!(
                (t_eigs[i] - p_eigs[i]).abs() <= 1e-9 * scale,
                "eig {i}: {} vs {}",
                t_eigs[i],
                p_eigs[i]
            );
        }

        // R0^2 = B^T M^-1 B
        let w0 = rom.input.transpose() * chol.solve(&rom.input);
        assert!((&f.r0 * &f.r0 - &w0).norm() <= 1e-10 * w0.norm().max(1.0));

        // first block column q1 = M^-1 B R0^-1, i.e. q1 R0 = M^-1 B
        let q1 = f.q.view((0, 0), (order, f.block_size)).into_owned();
        let minv_b = chol.solve(&rom.input);
        assert!((&q1 * &f.r0 - &minv_b).norm() <= 1e-9 * minv_b.norm());
    }

    #[test]
    fn scalar_oracle_exact_factorization() {
        // M = 1/4, S = 1/4, b = 1/2 -> T = [1], Q = [2], R0 = [1]
        let rom = build_rom(&pole_dataset::<f64>(&[(1.0, 1.0)], &[1.0])).unwrap();
        let f = block_lanczos(&rom).unwrap();
        assert!((f.t[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((f.q[(0, 0)].abs() - 2.0).abs() < 1e-12);
        assert!((f.r0[(0, 0)] - 1.0).abs() < 1e-12);
        // reduced solve at lambda = 1: coefficient 1/2, transfer 1/2
        let x = f.reduced_solve(1.0).unwrap();
        assert!((x[(0, 0)] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn invariants_on_scalar_chain() {
        let rom = build_rom(&pole_dataset::<f64>(&FIVE_POLES, &[1.0, 2.0, 14.0, 50.0])).unwrap();
        let f = block_lanczos(&rom).unwrap();
        check_invariants(&rom, &f);
        // T is exactly tridiagonal by construction, off-band exactly zero
        for i in 0..4usize {
            for j in 0..4usize {
                if i.abs_diff(j) > 1 {
                    assert_eq!(f.t[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn invariants_on_block_case() {
        let rom = synthesized_rom_2d();
        let f = block_lanczos(&rom).unwrap();
        assert_eq!(f.block_size, 2);
        check_invariants(&rom, &f);
    }

    #[test]
    fn transfer_preserved_under_basis_change() {
        let rom = synthesized_rom_2d();
        let f = block_lanczos(&rom).unwrap();
        for &lambda in &[0.7, 3.3, 77.0] {
            let x = f.reduced_solve(lambda).unwrap();
            let via_lanczos =
                f.r0.transpose() * x.view((0, 0), (f.block_size, f.block_size)).into_owned();
            let direct = rom_transfer(&rom, lambda).unwrap();
            let rel = (&via_lanczos - &direct).norm() / direct.norm();
            assert!(rel <= 1e-9, "lambda {lambda}: {rel}");
        }
    }

    #[test]
    fn reduced_coefficients_decay_at_large_shift() {
        let rom = build_rom(&pole_dataset::<f64>(&FIVE_POLES, &[1.0, 2.0, 14.0])).unwrap();
        let f = block_lanczos(&rom).unwrap();
        let x = f.reduced_solve(1e9).unwrap();
        assert!(x.norm() < 1e-8);
    }

    #[test]
    fn deficient_input_block_reports_breakdown() {
        let rom = build_rom(&pole_dataset::<f64>(&FIVE_POLES, &[1.0, 2.0])).unwrap();
        let broken = Rom {
            input: DMatrix::zeros(2, 1),
            ..rom
        };
        match block_lanczos(&broken) {
            Err(Error::LanczosBreakdown { step: 0 }) => {}
            other => panic!("expected breakdown at step 0, got {other:?}"),
        }
    }
}
