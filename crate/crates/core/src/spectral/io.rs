//! Text file formats: datasets, masks, rasters, and debug matrix dumps.
//!
//! All floating-point values are written with 17 significant decimal digits,
//! which round-trips IEEE doubles bit-exactly while staying diff-able and
//! language-neutral.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::Scalar;

use super::{SpectralDataset, SpectralPoint};

const DATASET_MAGIC: &str = "lsl-dataset v1";
const MASK_MAGIC: &str = "lsl-mask v1";

/// Full-precision rendering of one scalar.
pub fn fmt_full<F: Scalar>(x: F) -> String {
    format!("{x:.16e}")
}

struct LineReader<'a> {
    path: String,
    lines: std::str::Lines<'a>,
    line_no: usize,
}

impl<'a> LineReader<'a> {
    fn new(path: &Path, text: &'a str) -> Self {
        LineReader {
            path: path.display().to_string(),
            lines: text.lines(),
            line_no: 0,
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line: self.line_no,
            msg: msg.into(),
        }
    }

    fn next_line(&mut self) -> Result<&'a str> {
        loop {
            self.line_no += 1;
            match self.lines.next() {
                Some(l) => {
                    let t = l.trim();
                    if !t.is_empty() && !t.starts_with('#') {
                        return Ok(t);
                    }
                }
                None => return Err(self.err("unexpected end of file")),
            }
        }
    }

    fn expect_literal(&mut self, want: &str) -> Result<()> {
        let got = self.next_line()?;
        if got != want {
            return Err(self.err(format!("expected `{want}`, found `{got}`")));
        }
        Ok(())
    }

    fn expect_usize_field(&mut self, key: &str) -> Result<usize> {
        let line = self.next_line()?;
        let mut it = line.split_whitespace();
        match (it.next(), it.next(), it.next()) {
            (Some(k), Some(v), None) if k == key => v
                .parse()
                .map_err(|_| self.err(format!("field `{key}`: invalid count `{v}`"))),
            _ => Err(self.err(format!("expected `{key} <count>`, found `{line}`"))),
        }
    }

    fn parse_scalars<F: Scalar>(&self, line: &str, want: usize, what: &str) -> Result<Vec<F>> {
        let vals: Vec<F> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<F>()
                    .map_err(|_| self.err(format!("{what}: invalid number `{t}`")))
            })
            .collect::<Result<_>>()?;
        if vals.len() != want {
            return Err(self.err(format!("{what}: expected {want} values, found {}", vals.len())));
        }
        Ok(vals)
    }

    fn read_matrix<F: Scalar>(&mut self, rows: usize, cols: usize, what: &str) -> Result<DMatrix<F>> {
        let mut m = DMatrix::zeros(rows, cols);
        for i in 0..rows {
            let line = self.next_line()?;
            let vals = self.parse_scalars::<F>(line, cols, what)?;
            for (j, v) in vals.into_iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    fn read_bool_matrix(&mut self, rows: usize, cols: usize, what: &str) -> Result<DMatrix<bool>> {
        let mut m = DMatrix::from_element(rows, cols, false);
        for i in 0..rows {
            let line = self.next_line()?;
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != cols {
                return Err(self.err(format!(
                    "{what}: expected {cols} flags, found {}",
                    toks.len()
                )));
            }
            for (j, t) in toks.iter().enumerate() {
                m[(i, j)] = match *t {
                    "0" => false,
                    "1" => true,
                    other => return Err(self.err(format!("{what}: invalid flag `{other}`"))),
                };
            }
        }
        Ok(m)
    }
}

fn render_matrix_rows<F: Scalar>(out: &mut String, m: &DMatrix<F>) {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| fmt_full(m[(i, j)])).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
}

pub fn save_dataset<F: Scalar>(dataset: &SpectralDataset<F>, path: &Path) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "{DATASET_MAGIC}");
    let _ = writeln!(out, "m {}", dataset.num_points());
    let _ = writeln!(out, "tx {}", dataset.num_tx());
    let _ = writeln!(out, "rx {}", dataset.num_rx());
    let lambdas: Vec<String> = dataset.points().iter().map(|p| fmt_full(p.lambda)).collect();
    let _ = writeln!(out, "lambdas {}", lambdas.join(" "));
    for (j, p) in dataset.points().iter().enumerate() {
        let _ = writeln!(out, "point {j}");
        let _ = writeln!(out, "F");
        render_matrix_rows(&mut out, &p.f);
        let _ = writeln!(out, "dF");
        render_matrix_rows(&mut out, &p.df);
        let _ = writeln!(out, "mask");
        let mask = &dataset.masks()[j];
        for i in 0..mask.nrows() {
            let row: Vec<&str> = (0..mask.ncols())
                .map(|c| if mask[(i, c)] { "1" } else { "0" })
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn load_dataset<F: Scalar>(path: &Path) -> Result<SpectralDataset<F>> {
    let text = std::fs::read_to_string(path)?;
    let mut r = LineReader::new(path, &text);
    r.expect_literal(DATASET_MAGIC)?;
    let m = r.expect_usize_field("m")?;
    let k = r.expect_usize_field("tx")?;
    let l = r.expect_usize_field("rx")?;
    let lambda_line = r.next_line()?;
    let lambdas: Vec<F> = match lambda_line.strip_prefix("lambdas ") {
        Some(rest) => r.parse_scalars(rest, m, "lambdas")?,
        None => return Err(r.err("expected `lambdas ...`")),
    };
    let mut points = Vec::with_capacity(m);
    let mut masks = Vec::with_capacity(m);
    for j in 0..m {
        r.expect_literal(&format!("point {j}"))?;
        r.expect_literal("F")?;
        let f = r.read_matrix(k, l, "F")?;
        r.expect_literal("dF")?;
        let df = r.read_matrix(k, l, "dF")?;
        r.expect_literal("mask")?;
        let mask = r.read_bool_matrix(k, l, "mask")?;
        points.push(SpectralPoint {
            lambda: lambdas[j],
            f,
            df,
        });
        masks.push(mask);
    }
    SpectralDataset::with_masks(points, k, l, masks)
}

pub fn save_masks(masks: &[DMatrix<bool>], path: &Path) -> Result<()> {
    if masks.is_empty() {
        return Err(Error::InvalidDataset("no masks to save".into()));
    }
    let (k, l) = masks[0].shape();
    let mut out = String::new();
    let _ = writeln!(out, "{MASK_MAGIC}");
    let _ = writeln!(out, "m {}", masks.len());
    let _ = writeln!(out, "tx {k}");
    let _ = writeln!(out, "rx {l}");
    for (j, mask) in masks.iter().enumerate() {
        let _ = writeln!(out, "point {j}");
        for i in 0..k {
            let row: Vec<&str> = (0..l)
                .map(|c| if mask[(i, c)] { "1" } else { "0" })
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn load_masks(path: &Path) -> Result<Vec<DMatrix<bool>>> {
    let text = std::fs::read_to_string(path)?;
    let mut r = LineReader::new(path, &text);
    r.expect_literal(MASK_MAGIC)?;
    let m = r.expect_usize_field("m")?;
    let k = r.expect_usize_field("tx")?;
    let l = r.expect_usize_field("rx")?;
    let mut masks = Vec::with_capacity(m);
    for j in 0..m {
        r.expect_literal(&format!("point {j}"))?;
        masks.push(r.read_bool_matrix(k, l, "mask")?);
    }
    Ok(masks)
}

/// Write grid-shaped nodal values as a CSV raster: for 2D, `ny` lines of `nx`
/// comma-separated values (line = y index, column = x index); for 1D, one
/// value per line.
pub fn save_raster<F: Scalar>(grid: &Grid<F>, values: &DVector<F>, path: &Path) -> Result<()> {
    if values.len() != grid.num_nodes() {
        return Err(Error::Mismatch(format!(
            "raster has {} values for {} grid nodes",
            values.len(),
            grid.num_nodes()
        )));
    }
    let mut out = String::new();
    if grid.dimension() == 1 {
        for i in 0..values.len() {
            let _ = writeln!(out, "{}", fmt_full(values[i]));
        }
    } else {
        let [nx, ny] = [grid.nodes_per_axis()[0], grid.nodes_per_axis()[1]];
        for iy in 0..ny {
            let row: Vec<String> = (0..nx)
                .map(|ix| fmt_full(values[grid.index(ix, iy)]))
                .collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Read a raster written by [`save_raster`] (or any whitespace/comma separated
/// grid of numbers in the same scanline order).
pub fn load_raster<F: Scalar>(grid: &Grid<F>, path: &Path) -> Result<DVector<F>> {
    let text = std::fs::read_to_string(path)?;
    let r = LineReader::new(path, &text);
    let vals: Vec<F> = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty() && !t.starts_with('#'))
        .map(|t| {
            t.parse::<F>()
                .map_err(|_| r.err(format!("raster: invalid number `{t}`")))
        })
        .collect::<Result<_>>()?;
    if vals.len() != grid.num_nodes() {
        return Err(Error::Mismatch(format!(
            "raster has {} values for {} grid nodes",
            vals.len(),
            grid.num_nodes()
        )));
    }
    let mut out = DVector::zeros(grid.num_nodes());
    if grid.dimension() == 1 {
        for (i, v) in vals.into_iter().enumerate() {
            out[i] = v;
        }
    } else {
        let [nx, ny] = [grid.nodes_per_axis()[0], grid.nodes_per_axis()[1]];
        for iy in 0..ny {
            for ix in 0..nx {
                out[grid.index(ix, iy)] = vals[iy * nx + ix];
            }
        }
    }
    Ok(out)
}

/// Debug dump of a dense matrix, one row per line.
pub fn save_matrix<F: Scalar>(m: &DMatrix<F>, path: &Path) -> Result<()> {
    let mut out = String::new();
    render_matrix_rows(&mut out, m);
    std::fs::write(path, out)?;
    Ok(())
}
