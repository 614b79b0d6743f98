//! Extended Lippmann-Schwinger-Lanczos linear system: quadrature-weighted
//! kernel rows over every measured entry (including nonreciprocal receivers),
//! right-hand side `δF = F0 - F` with λ-derivatives, truncated-SVD solve, and
//! the Born baseline.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::forward::FieldSet;
use crate::grid::Grid;
use crate::internal::InternalFieldSet;
use crate::linalg::dense::svd_sorted;
use crate::scalar::Scalar;
use crate::spectral::SpectralDataset;

/// Default relative singular-value threshold for the truncated solve.
pub const DEFAULT_REL_THRESHOLD: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum RowKind {
    Value,
    Derivative,
}

/// Which measurement a row came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct RowIndex {
    pub kind: RowKind,
    pub shift: usize,
    pub source: usize,
    pub receiver: usize,
}

/// Flattened linear system in the unknown coefficient: one row per measured
/// (shift, source, receiver, value-or-derivative) tuple, columns indexed by
/// grid nodes (or basis coefficients after [`restrict_basis`]).
#[derive(Clone, Debug)]
pub struct LslSystem<F> {
    pub rows: DMatrix<F>,
    pub rhs: DVector<F>,
    pub row_index: Vec<RowIndex>,
    /// Expansion from unknown coefficients back to grid nodes; `None` means
    /// the pixel basis (identity).
    pub basis: Option<DMatrix<F>>,
    pub num_nodes: usize,
}

/// Truncation rule for the SVD solve.
#[derive(Clone, Copy, Debug)]
pub enum Truncation<F> {
    Rank(usize),
    RelThreshold(F),
}

impl<F: Scalar> Default for Truncation<F> {
    fn default() -> Self {
        Truncation::RelThreshold(F::of(DEFAULT_REL_THRESHOLD))
    }
}

#[derive(Clone, Debug)]
pub struct ReconstructionResult<F> {
    pub p_hat: DVector<F>,
    pub singular_values: DVector<F>,
    pub rank_used: usize,
    pub residual_norm: F,
}

/// Weighted kernel rows of one (source, receiver) pair at one shift:
/// value row `u0_r . u_i . w` and derivative row expanded by the product
/// rule.
pub(crate) fn kernel_rows<F: Scalar>(
    u0_r: nalgebra::DVectorView<F>,
    du0_r: nalgebra::DVectorView<F>,
    u_i: nalgebra::DVectorView<F>,
    du_i: nalgebra::DVectorView<F>,
    weights: &DVector<F>,
) -> (DVector<F>, DVector<F>) {
    let n = weights.len();
    let mut value = DVector::zeros(n);
    let mut deriv = DVector::zeros(n);
    for x in 0..n {
        value[x] = u0_r[x] * u_i[x] * weights[x];
        deriv[x] = (du0_r[x] * u_i[x] + u0_r[x] * du_i[x]) * weights[x];
    }
    (value, deriv)
}

fn check_alignment<F: Scalar>(
    d: &SpectralDataset<F>,
    d0: &SpectralDataset<F>,
    grid: &Grid<F>,
    background: &[FieldSet<F>],
    internal: &[InternalFieldSet<F>],
) -> Result<()> {
    if d.num_tx() != d0.num_tx() || d.num_rx() != d0.num_rx() || d.num_points() != d0.num_points()
    {
        return Err(Error::Mismatch(format!(
            "measured ({}x{}, m={}) and background ({}x{}, m={}) datasets disagree",
            d.num_tx(),
            d.num_rx(),
            d.num_points(),
            d0.num_tx(),
            d0.num_rx(),
            d0.num_points()
        )));
    }
    if background.len() != d.num_points() || internal.len() != d.num_points() {
        return Err(Error::Mismatch(
            "one background and one internal field set per shift required".into(),
        ));
    }
    let n = grid.num_nodes();
    for j in 0..d.num_points() {
        let lambda = d.point(j).lambda;
        if d0.point(j).lambda != lambda
            || background[j].lambda != lambda
            || internal[j].lambda != lambda
        {
            return Err(Error::Mismatch(format!("shift mismatch at point {j}")));
        }
        if background[j].fields.nrows() != n || internal[j].fields.nrows() != n {
            return Err(Error::Mismatch(format!(
                "field grids at point {j} do not match the {n}-node grid"
            )));
        }
        if background[j].fields.ncols() < d.num_rx() {
            return Err(Error::Mismatch(format!(
                "point {j}: background fields cover {} receivers, dataset has {}",
                background[j].fields.ncols(),
                d.num_rx()
            )));
        }
        if internal[j].fields.ncols() < d.num_tx() {
            return Err(Error::Mismatch(format!(
                "point {j}: internal fields cover {} sources, dataset has {}",
                internal[j].fields.ncols(),
                d.num_tx()
            )));
        }
    }
    Ok(())
}

/// The measured set: the upper triangle of the collocated K x K block
/// (reciprocal duplicates add no information) plus every masked-true extended
/// entry.
fn measured_entries<F: Scalar>(d: &SpectralDataset<F>) -> Vec<(usize, usize, usize)> {
    let (k, l) = (d.num_tx(), d.num_rx());
    let mut entries = Vec::new();
    for j in 0..d.num_points() {
        let mask = &d.masks()[j];
        for i in 0..k {
            for r in i..k {
                entries.push((j, i, r));
            }
            for r in k..l {
                if mask[(i, r)] {
                    entries.push((j, i, r));
                }
            }
        }
    }
    entries.sort_unstable();
    entries
}

/// Assemble the extended LSL system. `background` must hold the background
/// solutions (and λ-derivatives) for all L receivers-as-sources per shift;
/// `internal` holds the data-generated (or cheated) internal solutions for
/// the K sources.
pub fn assemble<F: Scalar>(
    d: &SpectralDataset<F>,
    d0: &SpectralDataset<F>,
    grid: &Grid<F>,
    background: &[FieldSet<F>],
    internal: &[InternalFieldSet<F>],
) -> Result<LslSystem<F>> {
    check_alignment(d, d0, grid, background, internal)?;
    let entries = measured_entries(d);
    let n = grid.num_nodes();
    let weights = grid.weights();
    let num_rows = 2 * entries.len();
    let mut rows = DMatrix::zeros(num_rows, n);
    let mut rhs = DVector::zeros(num_rows);
    let mut row_index = Vec::with_capacity(num_rows);

    // values first, then derivatives, each ordered by (shift, source, receiver)
    for (pos, &(j, i, r)) in entries.iter().enumerate() {
        let (value, deriv) = kernel_rows(
            background[j].fields.column(r),
            background[j].dfields.column(r),
            internal[j].fields.column(i),
            internal[j].dfields.column(i),
            &weights,
        );
        let dpos = entries.len() + pos;
        rows.row_mut(pos).copy_from(&value.transpose());
        rows.row_mut(dpos).copy_from(&deriv.transpose());
        rhs[pos] = d0.point(j).f[(i, r)] - d.point(j).f[(i, r)];
        rhs[dpos] = d0.point(j).df[(i, r)] - d.point(j).df[(i, r)];
        row_index.push(RowIndex {
            kind: RowKind::Value,
            shift: j,
            source: i,
            receiver: r,
        });
    }
    let derivative_index: Vec<RowIndex> = row_index
        .iter()
        .map(|ri| RowIndex {
            kind: RowKind::Derivative,
            ..*ri
        })
        .collect();
    row_index.extend(derivative_index);

    Ok(LslSystem {
        rows,
        rhs,
        row_index,
        basis: None,
        num_nodes: n,
    })
}

/// Born baseline: identical to [`assemble`] with the internal solutions
/// replaced by the background fields of the K sources.
pub fn assemble_born<F: Scalar>(
    d: &SpectralDataset<F>,
    d0: &SpectralDataset<F>,
    grid: &Grid<F>,
    background: &[FieldSet<F>],
) -> Result<LslSystem<F>> {
    let n = grid.num_nodes();
    let k = d.num_tx();
    let internal: Vec<InternalFieldSet<F>> = background
        .iter()
        .map(|fs| InternalFieldSet {
            lambda: fs.lambda,
            fields: fs.fields.view((0, 0), (n, k)).into_owned(),
            dfields: fs.dfields.view((0, 0), (n, k)).into_owned(),
        })
        .collect();
    assemble(d, d0, grid, background, &internal)
}

/// Replace the pixel unknowns by coefficients in the given basis columns;
/// reconstructions are expanded back to the grid.
pub fn restrict_basis<F: Scalar>(sys: &LslSystem<F>, basis: &DMatrix<F>) -> Result<LslSystem<F>> {
    if basis.nrows() != sys.rows.ncols() {
        return Err(Error::Mismatch(format!(
            "basis has {} rows for a system with {} unknowns",
            basis.nrows(),
            sys.rows.ncols()
        )));
    }
    let rows = &sys.rows * basis;
    let expansion = match &sys.basis {
        Some(prev) => prev * basis,
        None => basis.clone(),
    };
    Ok(LslSystem {
        rows,
        rhs: sys.rhs.clone(),
        row_index: sys.row_index.clone(),
        basis: Some(expansion),
        num_nodes: sys.num_nodes,
    })
}

/// Truncated-SVD pseudoinverse solve: keep singular values at or above
/// `rel_threshold * σ_max` (or the top `rank`), apply to the right-hand side,
/// expand through the basis if one is set. Deterministic for fixed inputs.
pub fn solve_truncated<F: Scalar>(
    sys: &LslSystem<F>,
    truncation: Truncation<F>,
) -> Result<ReconstructionResult<F>> {
    if sys.rows.nrows() == 0 || sys.rows.ncols() == 0 {
        return Err(Error::EmptySystem);
    }
    let (u, s, vt) = svd_sorted(&sys.rows)?;
    let available = s.len();
    let rank_used = match truncation {
        Truncation::Rank(r) => {
            if r > available {
                return Err(Error::Mismatch(format!(
                    "requested rank {r} exceeds min(rows, cols) = {available}"
                )));
            }
            r
        }
        Truncation::RelThreshold(t) => {
            if !(t > F::zero() && t < F::one()) {
                return Err(Error::Config(format!(
                    "relative threshold must lie in (0, 1), got {t}"
                )));
            }
            let cut = t * s[0];
            (0..available).take_while(|&i| s[i] >= cut && s[i] > F::zero()).count()
        }
    };

    let mut coef = DVector::zeros(sys.rows.ncols());
    for i in 0..rank_used {
        let proj = u.column(i).dot(&sys.rhs) / s[i];
        coef += vt.row(i).transpose() * proj;
    }
    let residual_norm = (&sys.rows * &coef - &sys.rhs).norm();
    let p_hat = match &sys.basis {
        Some(b) => b * &coef,
        None => coef,
    };
    Ok(ReconstructionResult {
        p_hat,
        singular_values: s,
        rank_used,
        residual_norm,
    })
}

impl<F: Scalar> LslSystem<F> {
    /// Debug dump of the system matrix and right-hand side.
    pub fn dump(&self, dir: &std::path::Path) -> Result<()> {
        crate::spectral::io::save_matrix(&self.rows, &dir.join("lsl_rows.txt"))?;
        crate::spectral::io::save_matrix(
            &DMatrix::from_column_slice(self.rhs.len(), 1, self.rhs.as_slice()),
            &dir.join("lsl_rhs.txt"),
        )?;
        Ok(())
    }
}
