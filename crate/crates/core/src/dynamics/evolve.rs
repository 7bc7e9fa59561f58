use super::{FieldSource, Trajectory, VelocityField};
use crate::error::{PlqpError, Result};
use crate::measures::GridDensity;

/// Mass per step that may be held back at faces into the boundary ring.
const BLOCKED_TOL: f64 = 1e-9;

/// One face between cells `lo` and `hi` (`hi` is the `+axis` neighbour).
struct Face {
    lo: usize,
    hi: usize,
    axis: usize,
    closed: bool,
}

fn faces(spec: &crate::measures::GridSpec) -> Vec<Face> {
    let mut out = Vec::new();
    for iy in 0..spec.ny() {
        for ix in 0..spec.nx() {
            let lo = spec.index(ix, iy);
            let mut push = |jx: usize, jy: usize, axis: usize| {
                let hi = spec.index(jx, jy);
                let closed = spec.is_ring(ix, iy) || spec.is_ring(jx, jy);
                out.push(Face { lo, hi, axis, closed });
            };
            if ix + 1 < spec.nx() {
                push(ix + 1, iy, 0);
            }
            if spec.dim() == 2 && iy + 1 < spec.ny() {
                push(ix, iy + 1, 1);
            }
        }
    }
    out
}

/// First-order upwind finite-volume transport of `density0` by `field`.
///
/// On `[t_k, t_{k+1}]` the face velocity is taken at the face center and
/// the interval midpoint. Requires `max|v|·Δt ≤ h/2` on faces carrying
/// mass; the returned trajectory carries the field sampled at `times`.
pub fn evolve(density0: &GridDensity, field: &dyn FieldSource, times: &[f64]) -> Result<Trajectory> {
    if times.is_empty() {
        return Err(PlqpError::InvalidParameter("no time stamps".into()));
    }
    let spec = density0.spec().clone();
    let h = spec.h();
    let faces = faces(&spec);
    let mut cur = density0.values().to_vec();
    let mut out = vec![density0.clone()];
    for w in times.windows(2) {
        let dt = w[1] - w[0];
        if !(dt > 0.0) {
            return Err(PlqpError::InvalidParameter("times must be strictly increasing".into()));
        }
        let tm = 0.5 * (w[0] + w[1]);
        let mut speed: f64 = 0.0;
        let mut outflow = vec![0.0; spec.len()];
        let mut fluxes = Vec::with_capacity(faces.len());
        let mut blocked = 0.0;
        for f in &faces {
            let (a, b) = (spec.center(f.lo), spec.center(f.hi));
            let u = field.velocity(tm, [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])])[f.axis];
            let (up, val) = if u > 0.0 { (f.lo, cur[f.lo]) } else { (f.hi, cur[f.hi]) };
            if val == 0.0 || u == 0.0 {
                fluxes.push(0.0);
                continue;
            }
            if f.closed {
                blocked += u.abs() * val * dt / h * spec.cell_volume();
                fluxes.push(0.0);
                continue;
            }
            speed = speed.max(u.abs());
            outflow[up] += u.abs() * dt / h;
            fluxes.push(u * val * dt / h);
        }
        if speed * dt > 0.5 * h + 1e-12 * h || outflow.iter().any(|&o| o > 1.0 + 1e-12) {
            return Err(PlqpError::CflViolation { courant: speed * dt / h, suggested_dt: 0.5 * h / speed });
        }
        if blocked > BLOCKED_TOL {
            return Err(PlqpError::SupportExitsGrid(format!("mass {blocked:.3e} reaches the ring at t = {}", w[1])));
        }
        for (f, &flux) in faces.iter().zip(&fluxes) {
            if flux != 0.0 {
                cur[f.lo] -= flux;
                cur[f.hi] += flux;
            }
        }
        for v in cur.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        out.push(GridDensity::new(spec.clone(), cur.clone())?);
    }
    let sampled = VelocityField::sample(&spec, times, field)?;
    Trajectory::new(times.to_vec(), out, Some(sampled))
}
