//! Run artifacts: rasters, PGM previews, singular spectra, metrics JSON.

use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::Grid;
use crate::spectral::io::fmt_full;
use crate::Real;

/// Reconstruction quality numbers reported by every run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Metrics {
    pub rel_l2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_l2_region: Option<f64>,
    pub max_abs: f64,
    pub rank_used: usize,
    pub residual_norm: f64,
}

/// Full run record written to `metrics.json`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub mode: String,
    pub dimension: usize,
    pub grid_nodes: Vec<usize>,
    pub grid_extents: Vec<f64>,
    pub num_tx: usize,
    pub num_rx_used: usize,
    pub lambdas: Vec<f64>,
    pub basis: String,
    pub truncation: String,
    pub metrics: Metrics,
}

impl RunReport {
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| crate::error::Error::Config(e.to_string()))?;
        std::fs::write(path, json + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| crate::error::Error::Parse {
            path: path.display().to_string(),
            line: 0,
            msg: e.to_string(),
        })
    }
}

pub fn compute_metrics(
    p_true: &DVector<Real>,
    p_hat: &DVector<Real>,
    region: Option<&[usize]>,
    rank_used: usize,
    residual_norm: Real,
) -> Metrics {
    let diff = p_hat - p_true;
    let denom = p_true.norm();
    let rel_l2 = if denom > 0.0 {
        diff.norm() / denom
    } else {
        diff.norm()
    };
    let rel_l2_region = region.map(|nodes| {
        let mut num = 0.0;
        let mut den = 0.0;
        for &i in nodes {
            num += diff[i] * diff[i];
            den += p_true[i] * p_true[i];
        }
        if den > 0.0 {
            (num / den).sqrt()
        } else {
            num.sqrt()
        }
    });
    Metrics {
        rel_l2,
        rel_l2_region,
        max_abs: diff.amax(),
        rank_used,
        residual_norm,
    }
}

/// 8-bit binary PGM preview mapping `[0, max(p_true, p_hat)]` linearly to
/// `[0, 255]`; negative values clamp to black. 1D grids render as a strip of
/// repeated rows.
pub fn save_pgm(
    grid: &Grid<Real>,
    p_true: &DVector<Real>,
    p_hat: &DVector<Real>,
    path: &Path,
) -> Result<()> {
    let vmax = p_true.amax().max(p_hat.amax()).max(f64::MIN_POSITIVE);
    let quantize = |v: Real| -> u8 { ((v / vmax).clamp(0.0, 1.0) * 255.0).round() as u8 };
    let (width, height, rows): (usize, usize, Vec<Vec<u8>>) = if grid.dimension() == 1 {
        let n = grid.num_nodes();
        let row: Vec<u8> = (0..n).map(|i| quantize(p_hat[i])).collect();
        (n, 32, std::iter::repeat(row).take(32).collect())
    } else {
        let [nx, ny] = [grid.nodes_per_axis()[0], grid.nodes_per_axis()[1]];
        // top scanline first, so y decreases down the image
        let rows = (0..ny)
            .rev()
            .map(|iy| (0..nx).map(|ix| quantize(p_hat[grid.index(ix, iy)])).collect())
            .collect();
        (nx, ny, rows)
    };
    let mut bytes = format!("P5\n{width} {height}\n255\n").into_bytes();
    for row in rows {
        bytes.extend_from_slice(&row);
    }
    std::fs::write(path, bytes)?;
    Ok(())
}

pub fn save_spectrum(values: &DVector<Real>, path: &Path) -> Result<()> {
    let mut out = String::new();
    for i in 0..values.len() {
        out.push_str(&fmt_full(values[i]));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}
