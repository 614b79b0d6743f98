//! Spectral measurement data model: transfer matrices, their λ-derivatives,
//! the nonreciprocal-array measurement mask, and the sensor layout.

pub mod io;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Relative Frobenius tolerance for reciprocity of the collocated sub-array.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// One spectral measurement: the K x L transfer matrix and its entrywise
/// λ-derivative at a single real shift.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralPoint<F> {
    pub lambda: F,
    pub f: DMatrix<F>,
    pub df: DMatrix<F>,
}

/// Ordered spectral measurements for a K-transmitter, L-receiver array
/// (`L >= K`, first K receivers collocated with the transmitters), plus a
/// per-point boolean mask marking which entries were measured.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralDataset<F> {
    points: Vec<SpectralPoint<F>>,
    masks: Vec<DMatrix<bool>>,
    num_tx: usize,
    num_rx: usize,
}

fn relative_asymmetry<F: Scalar>(block: &DMatrix<F>) -> F {
    let norm = block.norm();
    if norm == F::zero() {
        return F::zero();
    }
    (block - block.transpose()).norm() / norm
}

fn symmetrize_block<F: Scalar>(m: &mut DMatrix<F>, k: usize) {
    for i in 0..k {
        for j in (i + 1)..k {
            let avg = (m[(i, j)] + m[(j, i)]) * F::of(0.5);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

impl<F: Scalar> SpectralDataset<F> {
    /// Build a dataset with an all-true mask. Checks the type invariants and
    /// symmetrizes the collocated K x K blocks after the tolerance check.
    pub fn new(points: Vec<SpectralPoint<F>>, num_tx: usize, num_rx: usize) -> Result<Self> {
        let all_true = points
            .iter()
            .map(|_| DMatrix::from_element(num_tx, num_rx, true))
            .collect();
        Self::with_masks(points, num_tx, num_rx, all_true)
    }

    pub fn with_masks(
        mut points: Vec<SpectralPoint<F>>,
        num_tx: usize,
        num_rx: usize,
        masks: Vec<DMatrix<bool>>,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidDataset("need at least one spectral point".into()));
        }
        if num_tx == 0 || num_tx > num_rx {
            return Err(Error::InvalidDataset(format!(
                "need 1 <= K <= L, got K={num_tx}, L={num_rx}"
            )));
        }
        if masks.len() != points.len() {
            return Err(Error::InvalidDataset(format!(
                "{} masks for {} points",
                masks.len(),
                points.len()
            )));
        }
        for (idx, p) in points.iter().enumerate() {
            if p.f.shape() != (num_tx, num_rx) || p.df.shape() != (num_tx, num_rx) {
                return Err(Error::InvalidDataset(format!(
                    "point {idx}: matrix shape {:?} does not match K={num_tx}, L={num_rx}",
                    p.f.shape()
                )));
            }
            for j in (idx + 1)..points.len() {
                if points[j].lambda == p.lambda {
                    return Err(Error::InvalidDataset(format!(
                        "duplicate shift lambda={} at points {idx} and {j}",
                        p.lambda
                    )));
                }
            }
        }
        for (idx, mask) in masks.iter().enumerate() {
            if mask.shape() != (num_tx, num_rx) {
                return Err(Error::InvalidDataset(format!(
                    "point {idx}: mask shape {:?} does not match data",
                    mask.shape()
                )));
            }
            if !mask.view((0, 0), (num_tx, num_tx)).iter().all(|&b| b) {
                return Err(Error::InvalidDataset(format!(
                    "point {idx}: mask hides an entry of the collocated {num_tx}x{num_tx} block"
                )));
            }
        }
        let tol = F::of(SYMMETRY_TOL);
        for (idx, p) in points.iter_mut().enumerate() {
            for (name, m) in [("F", &mut p.f), ("dF", &mut p.df)] {
                let block = m.view((0, 0), (num_tx, num_tx)).into_owned();
                let asym = relative_asymmetry(&block);
                if !(asym <= tol) {
                    return Err(Error::InvalidDataset(format!(
                        "point {idx}: {name} collocated block asymmetry {asym:e} exceeds {SYMMETRY_TOL:e}"
                    )));
                }
                symmetrize_block(m, num_tx);
            }
        }
        Ok(SpectralDataset {
            points,
            masks,
            num_tx,
            num_rx,
        })
    }

    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    pub fn num_tx(&self) -> usize {
        self.num_tx
    }

    pub fn num_rx(&self) -> usize {
        self.num_rx
    }

    pub fn points(&self) -> &[SpectralPoint<F>] {
        &self.points
    }

    pub fn point(&self, j: usize) -> &SpectralPoint<F> {
        &self.points[j]
    }

    pub fn masks(&self) -> &[DMatrix<bool>] {
        &self.masks
    }

    pub fn lambdas(&self) -> Vec<F> {
        self.points.iter().map(|p| p.lambda).collect()
    }

    /// Restrict to the collocated K x K sub-array: the only data the ROM
    /// construction consumes. Idempotent.
    pub fn symmetric_part(&self) -> Self {
        let k = self.num_tx;
        let points = self
            .points
            .iter()
            .map(|p| {
                let mut f = p.f.view((0, 0), (k, k)).into_owned();
                let mut df = p.df.view((0, 0), (k, k)).into_owned();
                symmetrize_block(&mut f, k);
                symmetrize_block(&mut df, k);
                SpectralPoint {
                    lambda: p.lambda,
                    f,
                    df,
                }
            })
            .collect();
        let masks = self
            .points
            .iter()
            .map(|_| DMatrix::from_element(k, k, true))
            .collect();
        SpectralDataset {
            points,
            masks,
            num_tx: k,
            num_rx: k,
        }
    }

    /// Keep only the first `n` receiver columns (`n >= K`).
    pub fn truncate_receivers(&self, n: usize) -> Result<Self> {
        if n < self.num_tx || n > self.num_rx {
            return Err(Error::Mismatch(format!(
                "cannot truncate to {n} receivers with K={}, L={}",
                self.num_tx, self.num_rx
            )));
        }
        let points = self
            .points
            .iter()
            .map(|p| SpectralPoint {
                lambda: p.lambda,
                f: p.f.view((0, 0), (self.num_tx, n)).into_owned(),
                df: p.df.view((0, 0), (self.num_tx, n)).into_owned(),
            })
            .collect();
        let masks = self
            .masks
            .iter()
            .map(|m| m.view((0, 0), (self.num_tx, n)).into_owned())
            .collect();
        Ok(SpectralDataset {
            points,
            masks,
            num_tx: self.num_tx,
            num_rx: n,
        })
    }

    /// Replace the measurement flags. Masks may differ per spectral point;
    /// every mask must keep the collocated block fully measured. Numeric
    /// values are untouched.
    pub fn apply_mask(&self, masks: Vec<DMatrix<bool>>) -> Result<Self> {
        if masks.len() != self.points.len() {
            return Err(Error::Mismatch(format!(
                "{} masks for {} points",
                masks.len(),
                self.points.len()
            )));
        }
        for (idx, mask) in masks.iter().enumerate() {
            if mask.shape() != (self.num_tx, self.num_rx) {
                return Err(Error::Mismatch(format!(
                    "point {idx}: mask shape {:?} does not match data {:?}",
                    mask.shape(),
                    (self.num_tx, self.num_rx)
                )));
            }
            if !mask
                .view((0, 0), (self.num_tx, self.num_tx))
                .iter()
                .all(|&b| b)
            {
                return Err(Error::InvalidDataset(format!(
                    "point {idx}: mask hides an entry of the collocated block"
                )));
            }
        }
        Ok(SpectralDataset {
            points: self.points.clone(),
            masks,
            num_tx: self.num_tx,
            num_rx: self.num_rx,
        })
    }
}

/// Physical positions of the K sources and L receivers (first K receivers
/// collocated with the sources), plus the support radius of the mollified
/// source/receiver distributions.
#[derive(Clone, Debug, PartialEq)]
pub struct ArrayLayout<F> {
    source_positions: Vec<[F; 2]>,
    receiver_positions: Vec<[F; 2]>,
    mollifier_radius: F,
}

impl<F: Scalar> ArrayLayout<F> {
    /// `mollifier_radius = 0` selects the default single-cell (nodal delta)
    /// distribution.
    pub fn new(
        source_positions: Vec<[F; 2]>,
        receiver_positions: Vec<[F; 2]>,
        mollifier_radius: F,
    ) -> Result<Self> {
        if source_positions.is_empty() || receiver_positions.len() < source_positions.len() {
            return Err(Error::Config(
                "layout needs K >= 1 sources and L >= K receivers".into(),
            ));
        }
        for (i, s) in source_positions.iter().enumerate() {
            if receiver_positions[i] != *s {
                return Err(Error::Config(format!(
                    "receiver {i} is not collocated with source {i}"
                )));
            }
        }
        if mollifier_radius < F::zero() {
            return Err(Error::Config("mollifier radius must be >= 0".into()));
        }
        Ok(ArrayLayout {
            source_positions,
            receiver_positions,
            mollifier_radius,
        })
    }

    pub fn num_tx(&self) -> usize {
        self.source_positions.len()
    }

    pub fn num_rx(&self) -> usize {
        self.receiver_positions.len()
    }

    pub fn source_positions(&self) -> &[[F; 2]] {
        &self.source_positions
    }

    pub fn receiver_positions(&self) -> &[[F; 2]] {
        &self.receiver_positions
    }

    pub fn mollifier_radius(&self) -> F {
        self.mollifier_radius
    }

    /// Layout with only the first `n` receivers (`n >= K`).
    pub fn truncate_receivers(&self, n: usize) -> Result<Self> {
        if n < self.num_tx() || n > self.num_rx() {
            return Err(Error::Mismatch(format!(
                "cannot truncate layout to {n} receivers with K={}, L={}",
                self.num_tx(),
                self.num_rx()
            )));
        }
        Ok(ArrayLayout {
            source_positions: self.source_positions.clone(),
            receiver_positions: self.receiver_positions[..n].to_vec(),
            mollifier_radius: self.mollifier_radius,
        })
    }
}
