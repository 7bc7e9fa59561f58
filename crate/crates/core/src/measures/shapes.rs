//! Closed-form fixtures: ramp balls, multi-balls, boxes and cone bumps.

use std::f64::consts::PI;

use crate::error::{PlqpError, Result};
use crate::measures::atoms::dist;
use crate::measures::grid::{GridDensity, GridSpec, Point};

/// Continuum normalizer of the radial ramp `C·clamp((R−r)/w, 0, 1)` in 2D.
pub fn ramp_ball_normalizer(radius: f64, width: f64) -> f64 {
    1.0 / (PI * (radius * radius - radius * width + width * width / 3.0))
}

/// Continuum total variation of the unit-mass ramp ball, `C·π(2R − w)`.
pub fn ramp_ball_tv(radius: f64, width: f64) -> f64 {
    ramp_ball_normalizer(radius, width) * PI * (2.0 * radius - width)
}

/// Continuum `L²` norm of the unit-mass ramp ball.
pub fn ramp_ball_l2(radius: f64, width: f64) -> f64 {
    let c = ramp_ball_normalizer(radius, width);
    let core = radius - width;
    let sq = PI * core * core + 2.0 * PI * (radius * width / 3.0 - width * width / 4.0);
    c * sq.sqrt()
}

/// Unnormalized radial ramp profile `clamp((R−r)/w, 0, 1)`.
#[inline]
pub fn ramp_profile(r: f64, radius: f64, width: f64) -> f64 {
    ((radius - r) / width).clamp(0.0, 1.0)
}

fn check_ramp(spec: &GridSpec, radius: f64, width: f64) -> Result<()> {
    if spec.dim() != 2 {
        return Err(PlqpError::DimensionMismatch("ramp balls are two-dimensional".into()));
    }
    if !(width > 0.0 && width < radius) {
        return Err(PlqpError::InvalidParameter(format!(
            "ramp width {width} must lie in (0, R = {radius})"
        )));
    }
    Ok(())
}

fn ramp_values(spec: &GridSpec, center: Point, radius: f64, width: f64, scale: f64) -> Vec<f64> {
    (0..spec.len())
        .map(|i| scale * ramp_profile(dist(spec.center(i), center), radius, width))
        .collect()
}

/// Unit-mass radial ramp ball sampled at cell centers.
pub fn make_ramp_ball(spec: &GridSpec, center: Point, radius: f64, width: f64) -> Result<GridDensity> {
    check_ramp(spec, radius, width)?;
    let c = ramp_ball_normalizer(radius, width);
    GridDensity::from_samples(spec.clone(), ramp_values(spec, center, radius, width, c))
}

/// Multi-ball density with its per-component masses.
#[derive(Debug, Clone)]
pub struct MultiBall {
    pub density: GridDensity,
    pub component_masses: Vec<f64>,
}

/// Sum of ramp balls, ball `j` carrying mass `c_j`. Each component is
/// renormalized to its own mass, so component masses are exact.
pub fn make_multiball(
    spec: &GridSpec,
    centers: &[Point],
    radii: &[f64],
    weights: &[f64],
    width: f64,
) -> Result<MultiBall> {
    let n = centers.len();
    if n == 0 || radii.len() != n || weights.len() != n {
        return Err(PlqpError::InvalidParameter("centers/radii/weights lengths differ".into()));
    }
    let total: f64 = weights.iter().sum();
    if weights.iter().any(|&c| !(c > 0.0)) || (total - 1.0).abs() > 1e-12 {
        return Err(PlqpError::InvalidParameter(format!("weights must be positive and sum to 1, got {total}")));
    }
    for &r in radii {
        check_ramp(spec, r, width)?;
    }
    for i in 0..n {
        for j in i + 1..n {
            if dist(centers[i], centers[j]) <= radii[i] + radii[j] + 2.0 * width {
                return Err(PlqpError::ComponentsNotIsolated(format!("balls {i} and {j} overlap")));
            }
        }
    }
    let vol = spec.cell_volume();
    let mut values = vec![0.0; spec.len()];
    let mut masses = Vec::with_capacity(n);
    for j in 0..n {
        let cj = weights[j] * ramp_ball_normalizer(radii[j], width);
        let comp = ramp_values(spec, centers[j], radii[j], width, cj);
        let mass: f64 = comp.iter().sum::<f64>() * vol;
        if mass <= 0.0 || (mass / weights[j] - 1.0).abs() > super::grid::RENORM_TOL {
            return Err(PlqpError::InvalidDensity(format!(
                "component {j} sampled mass {mass} too far from {}",
                weights[j]
            )));
        }
        let fix = weights[j] / mass;
        for (v, c) in values.iter_mut().zip(comp) {
            *v += c * fix;
        }
        masses.push(weights[j]);
    }
    let density = GridDensity::new(spec.clone(), values)?;
    Ok(MultiBall { density, component_masses: masses })
}

/// Normalized indicator of the cells whose centers lie in `[lo, hi]`
/// (per axis, closed).
pub fn indicator_box(spec: &GridSpec, lo: Point, hi: Point) -> Result<GridDensity> {
    let eps = 1e-9 * spec.h();
    GridDensity::normalized(
        spec.clone(),
        (0..spec.len())
            .map(|i| {
                let c = spec.center(i);
                let inside = (0..spec.dim()).all(|a| c[a] >= lo[a] - eps && c[a] <= hi[a] + eps);
                if inside { 1.0 } else { 0.0 }
            })
            .collect(),
    )
}

/// Cone bump `C·max(0, 1 − |x − c|/ρ)`, normalized on the grid. Returns the
/// density and the Lipschitz constant of its continuum profile.
pub fn make_cone(spec: &GridSpec, center: Point, radius: f64) -> Result<(GridDensity, f64)> {
    let cont_mass = if spec.dim() == 1 { radius } else { PI * radius * radius / 3.0 };
    let c = 1.0 / cont_mass;
    let g = GridDensity::from_samples(
        spec.clone(),
        (0..spec.len())
            .map(|i| c * (1.0 - dist(spec.center(i), center) / radius).max(0.0))
            .collect(),
    )?;
    Ok((g, c / radius))
}

/// Per-component masses of `g` for components of a multi-ball (cells assigned
/// to the nearest center).
pub fn component_masses(g: &GridDensity, centers: &[Point]) -> Vec<f64> {
    let spec = g.spec();
    let mut masses = vec![0.0; centers.len()];
    for i in g.support() {
        let x = spec.center(i);
        let j = (0..centers.len())
            .min_by(|&a, &b| dist(x, centers[a]).total_cmp(&dist(x, centers[b])))
            .unwrap();
        masses[j] += g.values()[i] * spec.cell_volume();
    }
    masses
}
