//! JSON run configurations. Densities are either read from grid files
//! (paths relative to the config file) or generated from fixtures.

use std::path::{Path, PathBuf};

use plqp::measures::{indicator_box, io::load_density, make_multiball, make_ramp_ball, GridDensity, GridSpec, Point};
use plqp::mms::SchemeTemplate;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lo: f64,
    pub hi: f64,
    pub cells: usize,
    /// `1` for an interval, `2` (default) for a square.
    #[serde(default = "two")]
    pub dim: usize,
}

fn two() -> usize {
    2
}

impl GridConfig {
    fn spec(&self, cells_override: Option<usize>) -> plqp::Result<GridSpec> {
        let cells = cells_override.unwrap_or(self.cells);
        match self.dim {
            1 => GridSpec::interval(self.lo, self.hi, cells),
            _ => GridSpec::square(self.lo, self.hi, cells),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySource {
    File { path: PathBuf },
    RampBall { grid: GridConfig, center: Point, radius: f64, width: f64 },
    Multiball { grid: GridConfig, centers: Vec<Point>, radii: Vec<f64>, weights: Vec<f64>, width: f64 },
    Box { grid: GridConfig, lo: Point, hi: Point },
}

impl DensitySource {
    /// `cells` overrides the fixture resolution (ignored for files).
    pub fn build(&self, base: &Path, cells: Option<usize>) -> Result<GridDensity, CliError> {
        let d = match self {
            DensitySource::File { path } => load_density(&base.join(path)),
            DensitySource::RampBall { grid, center, radius, width } => {
                make_ramp_ball(&grid.spec(cells)?, *center, *radius, *width)
            }
            DensitySource::Multiball { grid, centers, radii, weights, width } => {
                make_multiball(&grid.spec(cells)?, centers, radii, weights, *width).map(|m| m.density)
            }
            DensitySource::Box { grid, lo, hi } => indicator_box(&grid.spec(cells)?, *lo, *hi),
        };
        Ok(d?)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MmsConfig {
    pub anchor: DensitySource,
    pub tau: f64,
    pub steps: usize,
    #[serde(default)]
    pub template: Option<SchemeTemplate>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveKind {
    Translate { velocity: Point },
    Dilate { factor: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    pub anchor: DensitySource,
    pub curve: CurveKind,
    #[serde(default = "one")]
    pub horizon: f64,
    pub steps: usize,
}

fn one() -> f64 {
    1.0
}

/// Reads and parses a config; the second value is the directory that
/// relative paths resolve against.
pub fn load<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<(T, PathBuf), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let cfg = serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    Ok((cfg, path.parent().unwrap_or(Path::new(".")).to_path_buf()))
}
