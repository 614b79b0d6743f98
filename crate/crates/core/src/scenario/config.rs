//! Declarative scenario configuration: grid, medium shapes, array layout,
//! shifts, mask, solver and output options, parsed from TOML files.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DVector;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::forward::Medium;
use crate::grid::Grid;
use crate::spectral::ArrayLayout;
use crate::Real;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub grid: GridSpec,
    pub medium: MediumSpec,
    pub layout: LayoutSpec,
    pub shifts: ShiftSpec,
    #[serde(default)]
    pub mask: Option<MaskSpec>,
    #[serde(default)]
    pub solve: SolveSpec,
    #[serde(default)]
    pub metrics: MetricsSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dimension: usize,
    pub extents: Vec<Real>,
    pub nodes: Vec<usize>,
    #[serde(default)]
    pub full_nodes: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumSpec {
    #[serde(default)]
    pub shapes: Vec<ShapeSpec>,
    #[serde(default)]
    pub raster: Option<String>,
    #[serde(default)]
    pub allow_negative: bool,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeSpec {
    pub kind: ShapeKind,
    pub center: Vec<Real>,
    pub width: Vec<Real>,
    pub amplitude: Real,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    /// Box-supported plateau.
    Bar,
    /// Gaussian bump; `width` is the full width at `1/e` amplitude.
    Bump,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutSpec {
    pub sources: Vec<Vec<Real>>,
    pub receivers: Vec<Vec<Real>>,
    #[serde(default)]
    pub mollifier_radius: Real,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftSpec {
    pub lambdas: Vec<Real>,
}

#[derive(Clone, Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct MaskSpec {
    /// Path to a mask file, relative to the config file.
    #[serde(default)]
    pub file: Option<String>,
    /// Entries to hide, as `[point, source, receiver]` triples.
    #[serde(default)]
    pub hide: Vec<[usize; 3]>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveSpec {
    pub mode: SolveMode,
    pub rank: Option<usize>,
    pub rel_threshold: Option<Real>,
    pub basis: BasisChoice,
    pub receivers_used: Option<usize>,
}

impl Default for SolveSpec {
    fn default() -> Self {
        SolveSpec {
            mode: SolveMode::Lsl,
            rank: None,
            rel_threshold: None,
            basis: BasisChoice::Pixel,
            receivers_used: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum SolveMode {
    Lsl,
    Born,
    Cheated,
}

impl SolveMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveMode::Lsl => "lsl",
            SolveMode::Born => "born",
            SolveMode::Cheated => "cheated",
        }
    }
}

impl FromStr for SolveMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lsl" => Ok(SolveMode::Lsl),
            "born" => Ok(SolveMode::Born),
            "cheated" => Ok(SolveMode::Cheated),
            other => Err(Error::Config(format!(
                "unknown mode `{other}` (expected lsl, born or cheated)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum BasisChoice {
    /// Per-node pixel basis.
    Pixel,
    /// Background snapshots at the data shifts.
    Background,
}

impl FromStr for BasisChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pixel" => Ok(BasisChoice::Pixel),
            "background" => Ok(BasisChoice::Background),
            other => Err(Error::Config(format!(
                "unknown basis `{other}` (expected pixel or background)"
            ))),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct MetricsSpec {
    #[serde(default)]
    pub region_min: Option<Vec<Real>>,
    #[serde(default)]
    pub region_max: Option<Vec<Real>>,
}

#[derive(Clone, Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub dir: Option<String>,
}

fn to_position(v: &[Real], dimension: usize, what: &str) -> Result<[Real; 2]> {
    if v.len() != dimension {
        return Err(Error::Config(format!(
            "{what}: expected {dimension} coordinates, got {}",
            v.len()
        )));
    }
    Ok([v[0], if dimension == 2 { v[1] } else { 0.0 }])
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::from_toml_str(&text, &base)
    }

    fn validate(&self) -> Result<()> {
        let d = self.grid.dimension;
        if d != 1 && d != 2 {
            return Err(Error::Config(format!("dimension must be 1 or 2, got {d}")));
        }
        if self.grid.extents.len() != d || self.grid.nodes.len() != d {
            return Err(Error::Config(
                "grid extents/nodes length must match the dimension".into(),
            ));
        }
        if let Some(fnodes) = &self.grid.full_nodes {
            if fnodes.len() != d {
                return Err(Error::Config("full_nodes length must match the dimension".into()));
            }
        }
        if self.medium.shapes.is_empty() == self.medium.raster.is_none() {
            return Err(Error::Config(
                "medium needs exactly one of `shapes` or `raster`".into(),
            ));
        }
        if self.shifts.lambdas.is_empty() {
            return Err(Error::Config("at least one shift required".into()));
        }
        for (i, a) in self.shifts.lambdas.iter().enumerate() {
            for b in &self.shifts.lambdas[i + 1..] {
                if a == b {
                    return Err(Error::Config(format!("duplicate shift {a}")));
                }
            }
        }
        if self.layout.sources.is_empty() || self.layout.receivers.len() < self.layout.sources.len()
        {
            return Err(Error::Config("layout needs K >= 1 sources and L >= K receivers".into()));
        }
        if let Some(n) = self.solve.receivers_used {
            if n < self.layout.sources.len() || n > self.layout.receivers.len() {
                return Err(Error::Config(format!(
                    "receivers_used = {n} outside [K, L] = [{}, {}]",
                    self.layout.sources.len(),
                    self.layout.receivers.len()
                )));
            }
        }
        if self.solve.rank.is_some() && self.solve.rel_threshold.is_some() {
            return Err(Error::Config(
                "solve: give at most one of `rank` and `rel_threshold`".into(),
            ));
        }
        if self.metrics.region_min.is_some() != self.metrics.region_max.is_some() {
            return Err(Error::Config(
                "metrics: region_min and region_max must be given together".into(),
            ));
        }
        Ok(())
    }

    pub fn build_grid(&self, full: bool) -> Result<Grid<Real>> {
        let nodes = if full {
            self.grid
                .full_nodes
                .as_ref()
                .ok_or_else(|| {
                    Error::Config(format!("scenario `{}` has no full_nodes", self.name))
                })?
                .clone()
        } else {
            self.grid.nodes.clone()
        };
        match self.grid.dimension {
            1 => Grid::line(self.grid.extents[0], nodes[0]),
            _ => Grid::rect(
                [self.grid.extents[0], self.grid.extents[1]],
                [nodes[0], nodes[1]],
            ),
        }
    }

    pub fn build_medium(&self, grid: &Grid<Real>) -> Result<Medium<Real>> {
        let p = if let Some(raster) = &self.medium.raster {
            crate::spectral::io::load_raster(grid, &self.base_dir.join(raster))?
        } else {
            let d = self.grid.dimension;
            let mut p = DVector::zeros(grid.num_nodes());
            for (si, shape) in self.medium.shapes.iter().enumerate() {
                if shape.center.len() != d || shape.width.len() != d {
                    return Err(Error::Config(format!(
                        "shape {si}: center/width length must match the dimension"
                    )));
                }
                for idx in 0..grid.num_nodes() {
                    let c = grid.coords(idx);
                    match shape.kind {
                        ShapeKind::Bar => {
                            let inside = (0..d).all(|ax| {
                                (c[ax] - shape.center[ax]).abs() <= shape.width[ax] * 0.5
                            });
                            if inside {
                                p[idx] += shape.amplitude;
                            }
                        }
                        ShapeKind::Bump => {
                            let mut arg = 0.0;
                            for ax in 0..d {
                                let s = (c[ax] - shape.center[ax]) / (shape.width[ax] * 0.5);
                                arg += s * s;
                            }
                            p[idx] += shape.amplitude * (-arg).exp();
                        }
                    }
                }
            }
            p
        };
        if self.medium.allow_negative {
            Medium::allowing_negative(grid.clone(), p)
        } else {
            Medium::new(grid.clone(), p)
        }
    }

    pub fn build_layout(&self) -> Result<ArrayLayout<Real>> {
        let d = self.grid.dimension;
        let sources = self
            .layout
            .sources
            .iter()
            .enumerate()
            .map(|(i, v)| to_position(v, d, &format!("source {i}")))
            .collect::<Result<Vec<_>>>()?;
        let receivers = self
            .layout
            .receivers
            .iter()
            .enumerate()
            .map(|(i, v)| to_position(v, d, &format!("receiver {i}")))
            .collect::<Result<Vec<_>>>()?;
        ArrayLayout::new(sources, receivers, self.layout.mollifier_radius)
    }

    pub fn truncation(&self) -> crate::lsl::Truncation<Real> {
        if let Some(r) = self.solve.rank {
            crate::lsl::Truncation::Rank(r)
        } else if let Some(t) = self.solve.rel_threshold {
            crate::lsl::Truncation::RelThreshold(t)
        } else {
            crate::lsl::Truncation::default()
        }
    }

    /// Node indices inside the configured metrics sub-rectangle, if any.
    pub fn region_nodes(&self, grid: &Grid<Real>) -> Option<Vec<usize>> {
        let (min, max) = match (&self.metrics.region_min, &self.metrics.region_max) {
            (Some(a), Some(b)) => (a, b),
            _ => return None,
        };
        let d = self.grid.dimension;
        let nodes = (0..grid.num_nodes())
            .filter(|&idx| {
                let c = grid.coords(idx);
                (0..d).all(|ax| c[ax] >= min[ax] && c[ax] <= max[ax])
            })
            .collect();
        Some(nodes)
    }
}
