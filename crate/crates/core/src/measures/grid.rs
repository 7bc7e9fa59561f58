use serde::{Deserialize, Serialize};

use crate::error::{PlqpError, Result};

/// Tolerance on the discrete mass of a [`GridDensity`].
pub const MASS_TOL: f64 = 1e-9;

/// Maximal relative correction accepted when renormalizing sampled continuum
/// densities.
pub const RENORM_TOL: f64 = 1e-3;

/// A point of ℝⁿ, `n ∈ {1, 2}`. One-dimensional points keep `y = 0`.
pub type Point = [f64; 2];

/// Regular cell-centered grid in one or two dimensions.
///
/// Cell `(ix, iy)` has center `origin + (ix·h, iy·h)`; values are stored
/// row-major with `x` varying fastest. In 1D `ny = 1` and the `y`
/// coordinate is identically zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    shape: [usize; 2],
    h: f64,
    origin: [f64; 2],
}

impl GridSpec {
    pub fn new(dim: usize, shape: &[usize], h: f64, origin: &[f64]) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(PlqpError::InvalidGrid(format!("dimension {dim} not in {{1,2}}")));
        }
        if shape.len() != dim || origin.len() != dim {
            return Err(PlqpError::InvalidGrid(format!(
                "shape/origin must have {dim} entries"
            )));
        }
        if shape.iter().any(|&s| s < 2) {
            return Err(PlqpError::InvalidGrid("shape must be >= 2 per axis".into()));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(PlqpError::InvalidGrid(format!("spacing h = {h} must be positive")));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(PlqpError::InvalidGrid("origin must be finite".into()));
        }
        let shape2 = if dim == 1 { [shape[0], 1] } else { [shape[0], shape[1]] };
        let origin2 = if dim == 1 { [origin[0], 0.0] } else { [origin[0], origin[1]] };
        Ok(Self { dim, shape: shape2, h, origin: origin2 })
    }

    /// Square 2D grid covering `[lo, hi]²` with `cells` cells per axis.
    pub fn square(lo: f64, hi: f64, cells: usize) -> Result<Self> {
        let h = (hi - lo) / cells as f64;
        Self::new(2, &[cells, cells], h, &[lo + 0.5 * h, lo + 0.5 * h])
    }

    /// 1D grid covering `[lo, hi]` with `cells` cells.
    pub fn interval(lo: f64, hi: f64, cells: usize) -> Result<Self> {
        let h = (hi - lo) / cells as f64;
        Self::new(1, &[cells], h, &[lo + 0.5 * h])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn nx(&self) -> usize {
        self.shape[0]
    }
    pub fn ny(&self) -> usize {
        self.shape[1]
    }
    pub fn shape(&self) -> &[usize] {
        &self.shape[..self.dim]
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn origin(&self) -> &[f64] {
        &self.origin[..self.dim]
    }
    pub fn len(&self) -> usize {
        self.shape[0] * self.shape[1]
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    /// `hⁿ`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.shape[0] + ix
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.shape[0], idx / self.shape[0])
    }

    #[inline]
    pub fn center(&self, idx: usize) -> Point {
        let (ix, iy) = self.coords(idx);
        self.center_of(ix, iy)
    }

    #[inline]
    pub fn center_of(&self, ix: usize, iy: usize) -> Point {
        let y = if self.dim == 1 { 0.0 } else { self.origin[1] + iy as f64 * self.h };
        [self.origin[0] + ix as f64 * self.h, y]
    }

    /// Whether the cell lies on the one-cell boundary ring.
    #[inline]
    pub fn is_ring(&self, ix: usize, iy: usize) -> bool {
        let on_x = ix == 0 || ix + 1 == self.shape[0];
        if self.dim == 1 {
            on_x
        } else {
            on_x || iy == 0 || iy + 1 == self.shape[1]
        }
    }

    #[inline]
    pub fn is_ring_index(&self, idx: usize) -> bool {
        let (ix, iy) = self.coords(idx);
        self.is_ring(ix, iy)
    }

    /// Fractional cell coordinates of a physical point (cell centers are integers).
    #[inline]
    pub fn fractional(&self, x: Point) -> [f64; 2] {
        let fx = (x[0] - self.origin[0]) / self.h;
        let fy = if self.dim == 1 { 0.0 } else { (x[1] - self.origin[1]) / self.h };
        [fx, fy]
    }

    /// Closed bounding box of all cells, `[lo, hi]` per axis.
    pub fn domain(&self) -> [[f64; 2]; 2] {
        let mut bx = [[0.0; 2]; 2];
        for a in 0..self.dim {
            bx[a][0] = self.origin[a] - 0.5 * self.h;
            bx[a][1] = self.origin[a] + (self.shape[a] as f64 - 0.5) * self.h;
        }
        bx
    }

    /// Axis-aligned 4-neighbours (2-neighbours in 1D) inside the grid.
    pub fn neighbours(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let (ix, iy) = self.coords(idx);
        let nx = self.shape[0] as isize;
        let ny = self.shape[1] as isize;
        let dirs: &[(isize, isize)] =
            if self.dim == 1 { &[(-1, 0), (1, 0)] } else { &[(-1, 0), (1, 0), (0, -1), (0, 1)] };
        dirs.iter().filter_map(move |&(dx, dy)| {
            let jx = ix as isize + dx;
            let jy = iy as isize + dy;
            (jx >= 0 && jx < nx && jy >= 0 && jy < ny).then(|| self.index(jx as usize, jy as usize))
        })
    }

    /// Bilinear interpolation of cell-centered `values` at a physical point,
    /// zero outside the grid.
    pub fn interpolate(&self, values: &[f64], x: Point) -> f64 {
        let f = self.fractional(x);
        let sample = |ix: isize, iy: isize| -> f64 {
            if ix < 0 || iy < 0 || ix >= self.shape[0] as isize || iy >= self.shape[1] as isize {
                0.0
            } else {
                values[self.index(ix as usize, iy as usize)]
            }
        };
        let x0 = f[0].floor();
        let ax = f[0] - x0;
        let ix = x0 as isize;
        if self.dim == 1 {
            return (1.0 - ax) * sample(ix, 0) + ax * sample(ix + 1, 0);
        }
        let y0 = f[1].floor();
        let ay = f[1] - y0;
        let iy = y0 as isize;
        (1.0 - ax) * (1.0 - ay) * sample(ix, iy)
            + ax * (1.0 - ay) * sample(ix + 1, iy)
            + (1.0 - ax) * ay * sample(ix, iy + 1)
            + ax * ay * sample(ix + 1, iy + 1)
    }

    /// Cells and weights of the area-weighting deposit of a point mass.
    pub fn deposit_weights(&self, x: Point) -> Vec<(isize, isize, f64)> {
        let f = self.fractional(x);
        let x0 = f[0].floor();
        let ax = f[0] - x0;
        let ix = x0 as isize;
        if self.dim == 1 {
            return vec![(ix, 0, 1.0 - ax), (ix + 1, 0, ax)];
        }
        let y0 = f[1].floor();
        let ay = f[1] - y0;
        let iy = y0 as isize;
        vec![
            (ix, iy, (1.0 - ax) * (1.0 - ay)),
            (ix + 1, iy, ax * (1.0 - ay)),
            (ix, iy + 1, (1.0 - ax) * ay),
            (ix + 1, iy + 1, ax * ay),
        ]
    }

    /// Cell-center quantization bound `h·√n/2`.
    pub fn quantization_bound(&self) -> f64 {
        self.h * (self.dim as f64).sqrt() / 2.0
    }
}

/// Nonnegative unit-mass density sampled at cell centers.
///
/// Invariants: all values finite and `≥ 0`, `Σ values·hⁿ = 1` within
/// [`MASS_TOL`], and the boundary ring carries no mass.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    spec: GridSpec,
    values: Vec<f64>,
}

impl GridDensity {
    /// Validating constructor; the values must already have unit mass.
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        check_values(&spec, &values)?;
        let mass = values.iter().sum::<f64>() * spec.cell_volume();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(PlqpError::InvalidDensity(format!("mass {mass} differs from 1")));
        }
        Ok(Self { spec, values })
    }

    /// Rescales arbitrary nonnegative values to unit mass.
    pub fn normalized(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        check_values(&spec, &values)?;
        let mass = values.iter().sum::<f64>() * spec.cell_volume();
        if mass <= 0.0 {
            return Err(PlqpError::ZeroMass);
        }
        let values = values.into_iter().map(|v| v / mass).collect();
        Self::new(spec, values)
    }

    /// Renormalizes cell-center samples of a unit-mass continuum density,
    /// refusing corrections larger than [`RENORM_TOL`].
    pub fn from_samples(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        check_values(&spec, &values)?;
        let mass = values.iter().sum::<f64>() * spec.cell_volume();
        if mass <= 0.0 {
            return Err(PlqpError::ZeroMass);
        }
        if (mass - 1.0).abs() > RENORM_TOL {
            return Err(PlqpError::InvalidDensity(format!(
                "sampled mass {mass} is too far from 1; grid too coarse for this profile"
            )));
        }
        let values = values.into_iter().map(|v| v / mass).collect();
        Self::new(spec, values)
    }

    /// Samples a nonnegative function at cell centers and normalizes.
    pub fn sample_fn(spec: GridSpec, f: impl Fn(Point) -> f64) -> Result<Self> {
        let values = (0..spec.len()).map(|i| f(spec.center(i))).collect();
        Self::normalized(spec, values)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spec.cell_volume()
    }
    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }
    /// Indices of cells with positive value, ascending.
    pub fn support(&self) -> Vec<usize> {
        (0..self.values.len()).filter(|&i| self.values[i] > 0.0).collect()
    }
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.spec.index(ix, iy)]
    }
    /// Bilinear interpolation at a physical point.
    pub fn interpolate(&self, x: Point) -> f64 {
        self.spec.interpolate(&self.values, x)
    }
}

fn check_values(spec: &GridSpec, values: &[f64]) -> Result<()> {
    if values.len() != spec.len() {
        return Err(PlqpError::InvalidDensity(format!(
            "{} values for a grid of {} cells",
            values.len(),
            spec.len()
        )));
    }
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() || v < 0.0 {
            return Err(PlqpError::InvalidDensity(format!("cell {i} has value {v}")));
        }
        if v > 0.0 && spec.is_ring_index(i) {
            let (ix, iy) = spec.coords(i);
            return Err(PlqpError::SupportExitsGrid(format!("cell ({ix},{iy}) is on the ring")));
        }
    }
    Ok(())
}
