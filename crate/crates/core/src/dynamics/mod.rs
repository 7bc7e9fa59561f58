//! Continuity-equation tooling.
//!
//! Curves of densities are [`Trajectory`] values, optionally carrying a
//! [`VelocityField`] sampled on the same grid and time stamps. Fields that
//! are known analytically implement [`FieldSource`] directly.

mod bb;
mod characteristics;
mod evolve;
pub mod io;
mod paths;
mod reconstruct;
mod residual;

pub use bb::{bb_verify, displacement_interpolation, BbReport};
pub use characteristics::{trace_characteristics, CharacteristicsReport};
pub use evolve::evolve;
pub use paths::{action_minimize, half_turn_and_shift_ensemble, PathEnsemble};
pub use reconstruct::{reconstruct_velocity, Reconstruction, VelocityNorm};
pub use residual::{continuity_residual, continuity_residual_with_panel, ResidualReport, TestPanel, PANEL_VERSION};

use crate::error::{PlqpError, Result};
use crate::measures::{GridDensity, GridSpec, Point};

/// A time-dependent vector field evaluated pointwise.
pub trait FieldSource: Sync {
    fn velocity(&self, t: f64, x: Point) -> Point;
}

/// Spatially constant field.
#[derive(Debug, Clone, Copy)]
pub struct ConstantField(pub Point);

impl FieldSource for ConstantField {
    fn velocity(&self, _t: f64, _x: Point) -> Point {
        self.0
    }
}

/// Generator of `t ↦ f(x/s(t))/s(t)ⁿ` with `s(t) = 1 − t + tM`:
/// `v_t(x) = (M−1)/(1 + t(M−1))·x`.
#[derive(Debug, Clone, Copy)]
pub struct DilationField {
    pub factor: f64,
}

impl FieldSource for DilationField {
    fn velocity(&self, t: f64, x: Point) -> Point {
        let k = (self.factor - 1.0) / (1.0 + t * (self.factor - 1.0));
        [k * x[0], k * x[1]]
    }
}

/// Cell-sampled vector field on a sequence of time stamps.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    spec: GridSpec,
    times: Vec<f64>,
    values: Vec<Vec<Point>>,
}

impl VelocityField {
    pub fn new(spec: GridSpec, times: Vec<f64>, values: Vec<Vec<Point>>) -> Result<Self> {
        if times.len() != values.len() || times.is_empty() {
            return Err(PlqpError::InvalidParameter("field times/values mismatch".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(PlqpError::InvalidParameter("field times must increase".into()));
        }
        for v in &values {
            if v.len() != spec.len() {
                return Err(PlqpError::InvalidParameter("field sample has wrong cell count".into()));
            }
            if v.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
                return Err(PlqpError::InvalidParameter("field has non-finite values".into()));
            }
        }
        Ok(Self { spec, times, values })
    }

    /// Samples a field source at every cell center and time.
    pub fn sample(spec: &GridSpec, times: &[f64], source: &dyn FieldSource) -> Result<Self> {
        let values = times
            .iter()
            .map(|&t| {
                (0..spec.len())
                    .map(|i| {
                        let v = source.velocity(t, spec.center(i));
                        if spec.dim() == 1 { [v[0], 0.0] } else { v }
                    })
                    .collect()
            })
            .collect();
        Self::new(spec.clone(), times.to_vec(), values)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }
    pub fn times(&self) -> &[f64] {
        &self.times
    }
    pub fn at(&self, k: usize) -> &[Point] {
        &self.values[k]
    }

    /// Sup-norm of the field at time index `k` over cells where
    /// `density > 0`.
    pub fn sup_on_support(&self, k: usize, density: &GridDensity) -> f64 {
        density
            .support()
            .into_iter()
            .map(|i| norm(self.values[k][i]))
            .fold(0.0, f64::max)
    }

    fn interpolate_at(&self, k: usize, x: Point) -> Point {
        let comp = |a: usize| {
            let f = self.spec.fractional(x);
            let sample = |ix: isize, iy: isize| -> f64 {
                if ix < 0 || iy < 0 || ix >= self.spec.nx() as isize || iy >= self.spec.ny() as isize {
                    0.0
                } else {
                    self.values[k][self.spec.index(ix as usize, iy as usize)][a]
                }
            };
            let x0 = f[0].floor();
            let ax = f[0] - x0;
            let ix = x0 as isize;
            if self.spec.dim() == 1 {
                return (1.0 - ax) * sample(ix, 0) + ax * sample(ix + 1, 0);
            }
            let y0 = f[1].floor();
            let ay = f[1] - y0;
            let iy = y0 as isize;
            (1.0 - ax) * (1.0 - ay) * sample(ix, iy)
                + ax * (1.0 - ay) * sample(ix + 1, iy)
                + (1.0 - ax) * ay * sample(ix, iy + 1)
                + ax * ay * sample(ix + 1, iy + 1)
        };
        [comp(0), if self.spec.dim() == 1 { 0.0 } else { comp(1) }]
    }
}

/// Bilinear in space, piecewise linear in time, clamped at the end times.
impl FieldSource for VelocityField {
    fn velocity(&self, t: f64, x: Point) -> Point {
        let n = self.times.len();
        if n == 1 || t <= self.times[0] {
            return self.interpolate_at(0, x);
        }
        if t >= self.times[n - 1] {
            return self.interpolate_at(n - 1, x);
        }
        let k = self.times.partition_point(|&s| s <= t) - 1;
        let a = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        let v0 = self.interpolate_at(k, x);
        let v1 = self.interpolate_at(k + 1, x);
        [(1.0 - a) * v0[0] + a * v1[0], (1.0 - a) * v0[1] + a * v1[1]]
    }
}

#[inline]
pub(crate) fn norm(v: Point) -> f64 {
    (v[0] * v[0] + v[1] * v[1]).sqrt()
}

/// Time-stamped densities on a shared grid with an optional field.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    densities: Vec<GridDensity>,
    field: Option<VelocityField>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, densities: Vec<GridDensity>, field: Option<VelocityField>) -> Result<Self> {
        if times.len() != densities.len() || times.is_empty() {
            return Err(PlqpError::InvalidParameter("times/densities length mismatch".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(PlqpError::InvalidParameter("times must be strictly increasing".into()));
        }
        let spec = densities[0].spec();
        if densities.iter().any(|d| d.spec() != spec) {
            return Err(PlqpError::SpecMismatch);
        }
        if let Some(f) = &field {
            if f.spec() != spec || f.times() != times.as_slice() {
                return Err(PlqpError::InvalidParameter("field must share grid and time stamps".into()));
            }
        }
        Ok(Self { times, densities, field })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }
    pub fn densities(&self) -> &[GridDensity] {
        &self.densities
    }
    pub fn field(&self) -> Option<&VelocityField> {
        self.field.as_ref()
    }
    pub fn spec(&self) -> &GridSpec {
        self.densities[0].spec()
    }
    pub fn len(&self) -> usize {
        self.times.len()
    }
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
    pub fn with_field(mut self, field: VelocityField) -> Result<Self> {
        if field.spec() != self.spec() || field.times() != self.times.as_slice() {
            return Err(PlqpError::InvalidParameter("field must share grid and time stamps".into()));
        }
        self.field = Some(field);
        Ok(self)
    }

    /// Monotone time change: sample `s ↦ μ_{σ(s)}` is represented by keeping
    /// the densities and relabelling times with `σ⁻¹`, scaling the field by
    /// `1/σ'`. `inverse` maps old times to new times, `inverse_derivative`
    /// is `(σ⁻¹)'` at the old times.
    pub fn reparametrize(
        &self,
        inverse: impl Fn(f64) -> f64,
        inverse_derivative: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let times: Vec<f64> = self.times.iter().map(|&t| inverse(t)).collect();
        let field = match &self.field {
            None => None,
            Some(f) => {
                let values = self
                    .times
                    .iter()
                    .enumerate()
                    .map(|(k, &t)| {
                        let s = 1.0 / inverse_derivative(t);
                        f.at(k).iter().map(|v| [v[0] * s, v[1] * s]).collect()
                    })
                    .collect();
                Some(VelocityField::new(self.spec().clone(), times.clone(), values)?)
            }
        };
        Self::new(times, self.densities.clone(), field)
    }
}
