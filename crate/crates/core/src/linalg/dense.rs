//! Dense helpers layered over nalgebra: sorted symmetric eigendecompositions,
//! symmetric square roots, generalized eigenvalues, sorted SVD.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Symmetric eigendecomposition with eigenvalues sorted ascending and
/// eigenvector columns permuted to match.
pub fn sym_eigen<F: Scalar>(a: &DMatrix<F>) -> (DVector<F>, DMatrix<F>) {
    let eig = nalgebra::SymmetricEigen::new(a.clone());
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .expect("eigenvalues are finite")
    });
    let values = DVector::from_fn(n, |i, _| eig.eigenvalues[order[i]]);
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Symmetric square root and inverse square root of an SPD matrix via
/// eigendecomposition. Eigenvalues below `floor_rel * trace` are treated as
/// rank deficiency.
pub fn sym_sqrt_inv<F: Scalar>(w: &DMatrix<F>, floor_rel: f64) -> Result<(DMatrix<F>, DMatrix<F>)> {
    let sym = (w + w.transpose()) * F::of(0.5);
    let (values, vectors) = sym_eigen(&sym);
    let floor = F::of(floor_rel) * sym.trace();
    if values[0] <= floor.max(F::zero()) {
        return Err(Error::RankDeficient);
    }
    let n = values.len();
    let mut sqrt = DMatrix::zeros(n, n);
    let mut inv_sqrt = DMatrix::zeros(n, n);
    for k in 0..n {
        let s = values[k].sqrt();
        let vk = vectors.column(k);
        for i in 0..n {
            for j in 0..n {
                sqrt[(i, j)] += vk[i] * s * vk[j];
                inv_sqrt[(i, j)] += vk[i] / s * vk[j];
            }
        }
    }
    Ok((sqrt, inv_sqrt))
}

/// Eigenvalues of the symmetric pencil `(S, M)` with `M` SPD, sorted
/// ascending. Reduced through the Cholesky factor of `M`.
pub fn pencil_eigenvalues<F: Scalar>(s: &DMatrix<F>, m: &DMatrix<F>) -> Result<Vec<F>> {
    let chol = nalgebra::Cholesky::new(m.clone()).ok_or(Error::Singular)?;
    let l = chol.l();
    // C = L^{-1} S L^{-T}
    let mut c = l.solve_lower_triangular(s).ok_or(Error::Singular)?;
    c.transpose_mut();
    let c = l.solve_lower_triangular(&c).ok_or(Error::Singular)?;
    let sym = (&c + c.transpose()) * F::of(0.5);
    let (values, _) = sym_eigen(&sym);
    Ok(values.iter().copied().collect())
}

/// Thin SVD with singular values sorted descending. `u` is `r x k`,
/// `v_t` is `k x c` with `k = min(r, c)`.
pub fn svd_sorted<F: Scalar>(a: &DMatrix<F>) -> Result<(DMatrix<F>, DVector<F>, DMatrix<F>)> {
    let svd = nalgebra::SVD::try_new(a.clone(), true, true, F::default_epsilon(), 1_000_000)
        .ok_or(Error::SvdFailed)?;
    let u = svd.u.ok_or(Error::SvdFailed)?;
    let v_t = svd.v_t.ok_or(Error::SvdFailed)?;
    let s = svd.singular_values;

    let k = s.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).expect("singular values are finite"));
    let sorted_s = DVector::from_fn(k, |i, _| s[order[i]]);
    let mut sorted_u = DMatrix::zeros(u.nrows(), k);
    let mut sorted_vt = DMatrix::zeros(k, v_t.ncols());
    for (dst, &src) in order.iter().enumerate() {
        sorted_u.set_column(dst, &u.column(src));
        sorted_vt.set_row(dst, &v_t.row(src));
    }
    Ok((sorted_u, sorted_s, sorted_vt))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_squares_back() {
        let w = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let (r, rinv) = sym_sqrt_inv(&w, 1e-13).unwrap();
        assert!((&r * &r - &w).norm() < 1e-12);
        assert!((&r * &rinv - DMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn sqrt_rejects_deficient_input() {
        let w = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(sym_sqrt_inv(&w, 1e-13), Err(Error::RankDeficient)));
    }

    #[test]
    fn pencil_matches_scalar_ratio() {
        let s = DMatrix::<f64>::from_row_slice(1, 1, &[0.75]);
        let m = DMatrix::<f64>::from_row_slice(1, 1, &[0.25]);
        let e = pencil_eigenvalues(&s, &m).unwrap();
        assert!((e[0] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn svd_is_sorted_and_reconstructs() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 2.0, 0.0, -1.0, 1.0]);
        let (u, s, vt) = svd_sorted(&a).unwrap();
        assert!(s[0] >= s[1]);
        let rebuilt = &u * DMatrix::from_diagonal(&s) * &vt;
        assert!((rebuilt - &a).norm() < 1e-12);
    }
}
