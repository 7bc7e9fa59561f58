//! Discrete total variation, isoperimetric ratio and Sobolev ratio.
//!
//! Gradients are forward differences with zero padding outside the grid,
//! combined isotropically per cell.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{PlqpError, Result};
use crate::measures::{GridDensity, GridSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalValue {
    pub value: f64,
    pub numerator: f64,
    pub denominator: f64,
    /// Exponent of the gradient norm (1 for total variation).
    pub numerator_exponent: f64,
    pub denominator_exponent: f64,
}

impl FunctionalValue {
    fn ratio(numerator: f64, denominator: f64, ne: f64, de: f64) -> Result<Self> {
        if !(denominator > 0.0) {
            return Err(PlqpError::InvalidDensity("zero denominator".into()));
        }
        Ok(Self { value: numerator / denominator, numerator, denominator, numerator_exponent: ne, denominator_exponent: de })
    }
}

/// Per-cell forward-difference magnitudes `√(Σ_axes Δ²)` (not divided by `h`).
pub(crate) fn jump_magnitudes<'a>(spec: &'a GridSpec, values: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
    let (nx, ny) = (spec.nx(), spec.ny());
    let two_d = spec.dim() == 2;
    (0..spec.len()).map(move |i| {
        let (ix, iy) = (i % nx, i / nx);
        let v = values[i];
        let dx = if ix + 1 < nx { values[i + 1] } else { 0.0 } - v;
        if !two_d {
            return dx.abs();
        }
        let dy = if iy + 1 < ny { values[i + nx] } else { 0.0 } - v;
        (dx * dx + dy * dy).sqrt()
    })
}

pub fn tv_raw(spec: &GridSpec, values: &[f64]) -> f64 {
    jump_magnitudes(spec, values).sum::<f64>() * spec.h().powi(spec.dim() as i32 - 1)
}

pub fn tv(f: &GridDensity) -> f64 {
    tv_raw(f.spec(), f.values())
}

/// `(Σ |v|^r hⁿ)^{1/r}`.
pub fn lebesgue_norm_raw(spec: &GridSpec, values: &[f64], r: f64) -> f64 {
    let vol = spec.cell_volume();
    if r.is_infinite() {
        return values.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    (values.iter().map(|v| v.abs().powf(r)).sum::<f64>() * vol).powf(1.0 / r)
}

/// `TV(f)/‖f‖_{L²}` for `n = 2`.
pub fn isop(f: &GridDensity) -> Result<FunctionalValue> {
    isop_raw(f.spec(), f.values())
}

pub fn isop_raw(spec: &GridSpec, values: &[f64]) -> Result<FunctionalValue> {
    if spec.dim() == 1 {
        return Err(PlqpError::IsopUndefinedInOneDim);
    }
    FunctionalValue::ratio(tv_raw(spec, values), lebesgue_norm_raw(spec, values, 2.0), 1.0, 2.0)
}

/// Closed-form isoperimetric ratio of a union of disjoint uniform disks with
/// radii `r` and masses `c`: `2√π·Σ(c/r)/√Σ(c/r)²`.
pub fn isop_multiball_formula(r: &[f64], c: &[f64]) -> Result<f64> {
    if r.is_empty() || r.len() != c.len() {
        return Err(PlqpError::InvalidParameter("radii and weights must have equal nonzero length".into()));
    }
    if r.iter().chain(c).any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(PlqpError::InvalidParameter("radii and weights must be positive".into()));
    }
    let total: f64 = c.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(PlqpError::InvalidParameter(format!("weights sum to {total}")));
    }
    let s1: f64 = r.iter().zip(c).map(|(r, c)| c / r).sum();
    let s2: f64 = r.iter().zip(c).map(|(r, c)| (c / r).powi(2)).sum();
    Ok(2.0 * PI.sqrt() * s1 / s2.sqrt())
}

/// `‖∇f‖_{L^r}/‖f‖_{L^{r*}}`, `r* = nr/(n−r)`, for `1 < r < n`.
pub fn sobolev_ratio(f: &GridDensity, r: f64) -> Result<FunctionalValue> {
    let spec = f.spec();
    let n = spec.dim() as f64;
    if !(r > 1.0 && r < n) {
        return Err(PlqpError::InvalidParameter(format!("Sobolev exponent r = {r} must lie in (1, {n})")));
    }
    let r_star = n * r / (n - r);
    let h = spec.h();
    let grad = (jump_magnitudes(spec, f.values()).map(|j| (j / h).powf(r)).sum::<f64>() * spec.cell_volume()).powf(1.0 / r);
    FunctionalValue::ratio(grad, lebesgue_norm_raw(spec, f.values(), r_star), r, r_star)
}
