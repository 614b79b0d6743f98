//! Tensor-product grids on an interval or a rectangle, with trapezoidal
//! quadrature weights defining the discrete inner product.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Regular grid on `[0, Lx]` (1D) or `[0, Lx] x [0, Ly]` (2D).
///
/// 2D nodes are indexed with the y axis fastest: `idx = ix * ny + iy`, so the
/// assembled operators have bandwidth `ny`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<F> {
    dimension: usize,
    extents: [F; 2],
    nodes: [usize; 2],
}

impl<F: Scalar> Grid<F> {
    pub fn line(extent: F, nodes: usize) -> Result<Self> {
        if nodes < 2 || extent <= F::zero() {
            return Err(Error::Config(
                "1d grid needs extent > 0 and at least 2 nodes".into(),
            ));
        }
        Ok(Grid {
            dimension: 1,
            extents: [extent, F::zero()],
            nodes: [nodes, 1],
        })
    }

    pub fn rect(extents: [F; 2], nodes: [usize; 2]) -> Result<Self> {
        if nodes[0] < 2 || nodes[1] < 2 || extents[0] <= F::zero() || extents[1] <= F::zero() {
            return Err(Error::Config(
                "2d grid needs positive extents and at least 2 nodes per axis".into(),
            ));
        }
        Ok(Grid {
            dimension: 2,
            extents,
            nodes,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn extents(&self) -> &[F] {
        &self.extents[..self.dimension]
    }

    pub fn nodes_per_axis(&self) -> &[usize] {
        &self.nodes[..self.dimension]
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes[0] * self.nodes[1]
    }

    pub fn spacing(&self, axis: usize) -> F {
        self.extents[axis] / F::of_usize(self.nodes[axis] - 1)
    }

    /// Bandwidth of nearest-neighbor coupling under this node ordering.
    pub fn bandwidth(&self) -> usize {
        if self.dimension == 1 {
            1
        } else {
            self.nodes[1]
        }
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        ix * self.nodes[1] + iy
    }

    #[inline]
    pub fn axis_indices(&self, idx: usize) -> (usize, usize) {
        (idx / self.nodes[1], idx % self.nodes[1])
    }

    pub fn coords(&self, idx: usize) -> [F; 2] {
        let (ix, iy) = self.axis_indices(idx);
        let x = self.spacing(0) * F::of_usize(ix);
        let y = if self.dimension == 2 {
            self.spacing(1) * F::of_usize(iy)
        } else {
            F::zero()
        };
        [x, y]
    }

    fn axis_weight(&self, axis: usize, i: usize) -> F {
        let h = self.spacing(axis);
        if i == 0 || i == self.nodes[axis] - 1 {
            h * F::of(0.5)
        } else {
            h
        }
    }

    /// Trapezoidal quadrature weight of a node.
    pub fn weight(&self, idx: usize) -> F {
        let (ix, iy) = self.axis_indices(idx);
        let mut w = self.axis_weight(0, ix);
        if self.dimension == 2 {
            w *= self.axis_weight(1, iy);
        }
        w
    }

    pub fn weights(&self) -> DVector<F> {
        DVector::from_fn(self.num_nodes(), |i, _| self.weight(i))
    }

    /// Weighted inner product of two nodal vectors.
    pub fn inner(&self, a: &DVector<F>, b: &DVector<F>) -> F {
        let mut acc = F::zero();
        for i in 0..self.num_nodes() {
            acc += a[i] * b[i] * self.weight(i);
        }
        acc
    }

    /// Node closest to a physical position; the position must lie inside the
    /// closed domain (up to a half-ulp style slack on the boundary).
    pub fn nearest_node(&self, pos: [F; 2]) -> Result<usize> {
        let slack = F::of(1e-9);
        let mut axis_idx = [0usize; 2];
        for axis in 0..self.dimension {
            let lo = -self.extents[axis] * slack;
            let hi = self.extents[axis] * (F::one() + slack);
            if pos[axis] < lo || pos[axis] > hi {
                return Err(Error::Config(format!(
                    "position {} outside domain on axis {axis}",
                    pos[axis]
                )));
            }
            let frac = pos[axis] / self.spacing(axis);
            let i = frac.round().as_f64() as isize;
            axis_idx[axis] = i.clamp(0, self.nodes[axis] as isize - 1) as usize;
        }
        Ok(self.index(axis_idx[0], axis_idx[1]))
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self == other
    }
}
