//! Forward problem: finite-difference discretization of `-Δ + p` with Neumann
//! boundary conditions, shifted solves, and synthesis of spectral datasets.
//!
//! The Laplacian uses the ghost-node Neumann closure, which together with the
//! trapezoidal quadrature weights makes the operator exactly self-adjoint in
//! the discrete inner product. That exactness is what lets the Loewner
//! formulas and the discrete Lippmann-Schwinger identity hold to machine
//! precision on synthesized data.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::banded::{BandedLu, BandedMatrix};
use crate::scalar::Scalar;
use crate::spectral::{ArrayLayout, SpectralDataset, SpectralPoint};

/// Condition-estimate ceiling for shifted solves; beyond this the shift is
/// reported as too close to the operator spectrum.
pub const SHIFT_CONDITION_LIMIT: f64 = 1e14;

/// Coefficient field on a grid.
#[derive(Clone, Debug)]
pub struct Medium<F> {
    grid: Grid<F>,
    p: DVector<F>,
}

impl<F: Scalar> Medium<F> {
    /// Requires `p >= 0` everywhere, which guarantees a positive semidefinite
    /// operator.
    pub fn new(grid: Grid<F>, p: DVector<F>) -> Result<Self> {
        if p.len() != grid.num_nodes() {
            return Err(Error::Mismatch(format!(
                "medium has {} values for {} nodes",
                p.len(),
                grid.num_nodes()
            )));
        }
        let min = p.iter().copied().fold(F::zero(), |a, b| a.min(b));
        if min < F::zero() {
            return Err(Error::NegativeCoefficient { min: min.as_f64() });
        }
        Ok(Medium { grid, p })
    }

    /// Override for sign-indefinite coefficients; loses the SPD guarantee.
    pub fn allowing_negative(grid: Grid<F>, p: DVector<F>) -> Result<Self> {
        if p.len() != grid.num_nodes() {
            return Err(Error::Mismatch(format!(
                "medium has {} values for {} nodes",
                p.len(),
                grid.num_nodes()
            )));
        }
        let min = p.iter().copied().fold(F::zero(), |a, b| a.min(b));
        if min < F::zero() {
            log::warn!(
                "medium has negative coefficient values (min {:.3e}); SPD guarantees are void",
                min.as_f64()
            );
        }
        Ok(Medium { grid, p })
    }

    pub fn background(grid: Grid<F>) -> Self {
        let n = grid.num_nodes();
        Medium {
            grid,
            p: DVector::zeros(n),
        }
    }

    pub fn grid(&self) -> &Grid<F> {
        &self.grid
    }

    pub fn p(&self) -> &DVector<F> {
        &self.p
    }
}

/// Mollified source/receiver distribution as sparse nodal density values,
/// normalized to unit mass in the quadrature inner product.
#[derive(Clone, Debug)]
pub struct SourceTerm<F> {
    pub entries: Vec<(usize, F)>,
}

impl<F: Scalar> SourceTerm<F> {
    pub fn to_dense(&self, n: usize) -> DVector<F> {
        let mut g = DVector::zeros(n);
        for &(idx, v) in &self.entries {
            g[idx] = v;
        }
        g
    }

    /// Functional application `<g, u>` in the weighted inner product.
    pub fn inner(&self, grid: &Grid<F>, u: nalgebra::DVectorView<F>) -> F {
        let mut acc = F::zero();
        for &(idx, v) in &self.entries {
            acc += v * u[idx] * grid.weight(idx);
        }
        acc
    }
}

/// Discrete hat distribution centered at `pos` with the given support radius;
/// a radius of at most one grid cell degenerates to a scaled nodal delta.
pub fn source_term<F: Scalar>(grid: &Grid<F>, pos: [F; 2], radius: F) -> Result<SourceTerm<F>> {
    let center = grid.nearest_node(pos)?;
    let mut entries: Vec<(usize, F)> = Vec::new();
    if radius > F::zero() {
        for idx in 0..grid.num_nodes() {
            let c = grid.coords(idx);
            let mut hat = F::one();
            for axis in 0..grid.dimension() {
                let d = (c[axis] - pos[axis]).abs();
                if d >= radius {
                    hat = F::zero();
                    break;
                }
                hat *= F::one() - d / radius;
            }
            if hat > F::zero() {
                entries.push((idx, hat));
            }
        }
    }
    if entries.is_empty() {
        entries.push((center, F::one()));
    }
    let mass: F = entries
        .iter()
        .map(|&(idx, v)| v * grid.weight(idx))
        .fold(F::zero(), |a, b| a + b);
    for e in &mut entries {
        e.1 /= mass;
    }
    Ok(SourceTerm { entries })
}

/// Per-source solutions and their λ-derivatives at one shift; columns are
/// indexed by source.
#[derive(Clone, Debug)]
pub struct FieldSet<F> {
    pub lambda: F,
    pub fields: DMatrix<F>,
    pub dfields: DMatrix<F>,
}

/// Discretized `-Δ + p` together with the quadrature weights that define the
/// inner product it is self-adjoint in.
pub struct DiscreteOperator<F> {
    stiffness: BandedMatrix<F>,
    grid: Grid<F>,
}

pub fn assemble_operator<F: Scalar>(medium: &Medium<F>) -> DiscreteOperator<F> {
    let grid = medium.grid().clone();
    let n = grid.num_nodes();
    let bw = grid.bandwidth();
    let mut a = BandedMatrix::zeros(n, bw, bw);

    for axis in 0..grid.dimension() {
        let h = grid.spacing(axis);
        let inv_h2 = F::one() / (h * h);
        let count = grid.nodes_per_axis()[axis];
        let stride = if axis == 0 { grid.bandwidth() } else { 1 };
        // 1D grids have stride 1 on their only axis
        let stride = if grid.dimension() == 1 { 1 } else { stride };
        for idx in 0..n {
            let (ix, iy) = grid.axis_indices(idx);
            let i = if axis == 0 { ix } else { iy };
            let two = F::of(2.0);
            a.add(idx, idx, two * inv_h2);
            if i == 0 {
                a.add(idx, idx + stride, -two * inv_h2);
            } else if i == count - 1 {
                a.add(idx, idx - stride, -two * inv_h2);
            } else {
                a.add(idx, idx - stride, -inv_h2);
                a.add(idx, idx + stride, -inv_h2);
            }
        }
    }
    for idx in 0..n {
        a.add(idx, idx, medium.p()[idx]);
    }
    DiscreteOperator {
        stiffness: a,
        grid,
    }
}

impl<F: Scalar> DiscreteOperator<F> {
    pub fn grid(&self) -> &Grid<F> {
        &self.grid
    }

    pub fn stiffness(&self) -> &BandedMatrix<F> {
        &self.stiffness
    }

    pub fn apply(&self, x: &DVector<F>) -> DVector<F> {
        self.stiffness.mul_vec(x)
    }

    /// Discrete bilinear form `<A u, v>` in the weighted inner product.
    pub fn energy_inner(&self, u: &DVector<F>, v: &DVector<F>) -> F {
        let au = self.apply(u);
        self.grid.inner(&au, v)
    }

    /// Factor `A + λ I`, guarding against shifts that fall on (or nearly on)
    /// the operator spectrum.
    pub fn factor_shifted(&self, lambda: F) -> Result<BandedLu<F>> {
        let lu = self.stiffness.shifted(lambda).factor().map_err(|e| match e {
            Error::Singular => Error::ShiftNearSpectrum {
                lambda: lambda.as_f64(),
                cond: f64::INFINITY,
            },
            other => other,
        })?;
        if lu.condition_proxy() > SHIFT_CONDITION_LIMIT {
            return Err(Error::ShiftNearSpectrum {
                lambda: lambda.as_f64(),
                cond: lu.condition_proxy(),
            });
        }
        Ok(lu)
    }

    /// Solve `(A + λ) u = g` and `(A + λ) u' = -u` for every source,
    /// reusing one factorization.
    ///
    /// No iterative refinement: the Loewner formulas downstream benefit from
    /// the value, derivative and snapshot errors staying correlated through
    /// one fixed solve operator, and refinement was measured to break that
    /// correlation (Loewner-vs-Gram agreement degraded by an order of
    /// magnitude with a refinement sweep).
    pub fn solve_sources(&self, lambda: F, sources: &[SourceTerm<F>]) -> Result<FieldSet<F>> {
        let n = self.grid.num_nodes();
        let lu = self.factor_shifted(lambda)?;
        let mut fields = DMatrix::zeros(n, sources.len());
        let mut dfields = DMatrix::zeros(n, sources.len());
        for (s, src) in sources.iter().enumerate() {
            let mut u = src.to_dense(n);
            lu.solve_in_place(&mut u);
            let mut du = -&u;
            lu.solve_in_place(&mut du);
            fields.set_column(s, &u);
            dfields.set_column(s, &du);
        }
        Ok(FieldSet {
            lambda,
            fields,
            dfields,
        })
    }
}

fn layout_sources<F: Scalar>(
    grid: &Grid<F>,
    positions: &[[F; 2]],
    radius: F,
) -> Result<Vec<SourceTerm<F>>> {
    positions
        .iter()
        .map(|&p| source_term(grid, p, radius))
        .collect()
}

/// Fields of the K layout sources at one shift.
pub fn solve_shifted<F: Scalar>(
    op: &DiscreteOperator<F>,
    lambda: F,
    layout: &ArrayLayout<F>,
) -> Result<FieldSet<F>> {
    let sources = layout_sources(op.grid(), layout.source_positions(), layout.mollifier_radius())?;
    op.solve_sources(lambda, &sources)
}

fn transfer_matrices<F: Scalar>(
    grid: &Grid<F>,
    receivers: &[SourceTerm<F>],
    fs: &FieldSet<F>,
    num_src: usize,
) -> (DMatrix<F>, DMatrix<F>) {
    let l = receivers.len();
    let mut f = DMatrix::zeros(num_src, l);
    let mut df = DMatrix::zeros(num_src, l);
    for i in 0..num_src {
        for (r, rx) in receivers.iter().enumerate() {
            f[(i, r)] = rx.inner(grid, fs.fields.column(i));
            df[(i, r)] = rx.inner(grid, fs.dfields.column(i));
        }
    }
    (f, df)
}

/// Synthesize the exact discrete spectral dataset of a known medium:
/// `F(λ)[i, r] = <g_r, u_i(λ)>` over the K sources and L receivers.
pub fn synthesize_dataset<F: Scalar>(
    medium: &Medium<F>,
    layout: &ArrayLayout<F>,
    lambdas: &[F],
) -> Result<SpectralDataset<F>> {
    let op = assemble_operator(medium);
    let receivers = layout_sources(
        op.grid(),
        layout.receiver_positions(),
        layout.mollifier_radius(),
    )?;
    let sources = &receivers[..layout.num_tx()];
    let points: Vec<SpectralPoint<F>> = lambdas
        .par_iter()
        .map(|&lambda| {
            let fs = op.solve_sources(lambda, sources)?;
            let (f, df) = transfer_matrices(op.grid(), &receivers, &fs, layout.num_tx());
            Ok(SpectralPoint { lambda, f, df })
        })
        .collect::<Result<_>>()?;
    SpectralDataset::new(points, layout.num_tx(), layout.num_rx())
}

/// Background (`p = 0`) operator and solutions for *all* L receivers treated
/// as sources (legitimate by reciprocity), at every shift.
pub fn background_model<F: Scalar>(
    grid: &Grid<F>,
    layout: &ArrayLayout<F>,
    lambdas: &[F],
) -> Result<(DiscreteOperator<F>, Vec<FieldSet<F>>)> {
    let op = assemble_operator(&Medium::background(grid.clone()));
    let receivers = layout_sources(grid, layout.receiver_positions(), layout.mollifier_radius())?;
    let fieldsets: Vec<FieldSet<F>> = lambdas
        .par_iter()
        .map(|&lambda| op.solve_sources(lambda, &receivers))
        .collect::<Result<_>>()?;
    Ok((op, fieldsets))
}

/// Dataset assembled from precomputed per-shift fields (first `K` columns are
/// the source fields).
pub fn dataset_from_fieldsets<F: Scalar>(
    op: &DiscreteOperator<F>,
    layout: &ArrayLayout<F>,
    fieldsets: &[FieldSet<F>],
) -> Result<SpectralDataset<F>> {
    let receivers = layout_sources(
        op.grid(),
        layout.receiver_positions(),
        layout.mollifier_radius(),
    )?;
    let points: Vec<SpectralPoint<F>> = fieldsets
        .iter()
        .map(|fs| {
            let (f, df) = transfer_matrices(op.grid(), &receivers, fs, layout.num_tx());
            SpectralPoint {
                lambda: fs.lambda,
                f,
                df,
            }
        })
        .collect();
    SpectralDataset::new(points, layout.num_tx(), layout.num_rx())
}
