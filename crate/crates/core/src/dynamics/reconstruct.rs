use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Trajectory, VelocityField};
use crate::bottleneck::winf;
use crate::error::{PlqpError, Result};
use crate::measures::{dist, grid_to_atoms, GridDensity, GridSpec, Point};
use crate::transport::{min_cost_plan, Coupling};

/// Densities below this are treated as empty when dividing momentum.
const DENSITY_FLOOR: f64 = 1e-9;
/// Largest atom count for which the bottleneck plan is re-optimized for
/// total length.
const REFINE_ATOMS: usize = 1500;
const CG_TOL: f64 = 1e-13;
const IRLS_ITERS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum VelocityNorm {
    /// Least `L^q(f̄)` velocity, `1 ≤ q < ∞`.
    Lq { q: f64 },
    /// Least sup-norm velocity.
    Linf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub norm: VelocityNorm,
    /// Cell velocities; sample `k` belongs to `[t_k, t_{k+1}]`, the last
    /// sample repeats the last interval.
    pub field: VelocityField,
    /// Per interval: the `L^q(f̄)` norm of `v`, or for `Linf` the least
    /// speed bound `W_∞/Δ` of a feasible plan.
    pub per_step_norm: Vec<f64>,
    /// Per interval: largest `|v|` over cells with `f̄ ≥ 1e-9`.
    pub field_sup: Vec<f64>,
}

/// Momentum on faces: `mx[c]` crosses from `c` to `c + e_x`, `my[c]` to `c + e_y`.
struct Faces {
    mx: Vec<f64>,
    my: Vec<f64>,
}

impl Faces {
    fn zeros(n: usize) -> Self {
        Self { mx: vec![0.0; n], my: vec![0.0; n] }
    }
}

fn manhattan(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).abs() + (a[1] - b[1]).abs()
}

/// Velocity fields whose discrete continuity equation reproduces each
/// consecutive pair of the trajectory.
///
/// The momentum `m = v·f̄` is the unknown, `f̄` the average of the two
/// end densities. `Lq` minimizes `Σ |m|^q f̄^{1−q}`, the discrete
/// `‖v‖_{L^q(f̄)}^q`, over face fluxes on the supports dilated by one cell:
/// a weighted graph Laplacian solve for `q = 2`, iteratively reweighted
/// otherwise. `Linf` reports the bottleneck quotient `W_∞/Δ`, the least
/// speed bound under which a feasible plan exists, and routes that plan
/// (shortest total lattice length among pairs within the bound) along
/// staircase paths to build the cell field.
pub fn reconstruct_velocity(traj: &Trajectory, norm: VelocityNorm) -> Result<Reconstruction> {
    if traj.len() < 2 {
        return Err(PlqpError::TooFewSamples { needed: 2, got: traj.len() });
    }
    if let VelocityNorm::Lq { q } = norm {
        if !(q >= 1.0 && q.is_finite()) {
            return Err(PlqpError::InvalidParameter(format!("q = {q} must be finite and >= 1")));
        }
    }
    let spec = traj.spec().clone();
    let t = traj.times();
    let d = traj.densities();
    let steps: Vec<(Vec<Point>, f64, f64)> = (0..traj.len() - 1)
        .into_par_iter()
        .map(|k| {
            let dt = t[k + 1] - t[k];
            let (faces, value) = match norm {
                VelocityNorm::Linf => linf_faces(&d[k], &d[k + 1], dt)?,
                VelocityNorm::Lq { q } => (lq_faces(&d[k], &d[k + 1], dt, q)?, f64::NAN),
            };
            let fbar: Vec<f64> = d[k].values().iter().zip(d[k + 1].values()).map(|(a, b)| 0.5 * (a + b)).collect();
            let v = cell_velocity(&spec, &faces, &fbar);
            let sup = (0..spec.len()).filter(|&i| fbar[i] >= DENSITY_FLOOR).map(|i| super::norm(v[i])).fold(0.0, f64::max);
            let value = match norm {
                VelocityNorm::Linf => value,
                VelocityNorm::Lq { q } => {
                    let s: f64 = (0..spec.len()).map(|i| super::norm(v[i]).powf(q) * fbar[i]).sum();
                    (s * spec.cell_volume()).powf(1.0 / q)
                }
            };
            Ok((v, value, sup))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut values: Vec<Vec<Point>> = steps.iter().map(|s| s.0.clone()).collect();
    values.push(values.last().unwrap().clone());
    let field = VelocityField::new(spec, t.to_vec(), values)?;
    Ok(Reconstruction {
        norm,
        field,
        per_step_norm: steps.iter().map(|s| s.1).collect(),
        field_sup: steps.iter().map(|s| s.2).collect(),
    })
}

fn cell_velocity(spec: &GridSpec, faces: &Faces, fbar: &[f64]) -> Vec<Point> {
    (0..spec.len())
        .map(|c| {
            if fbar[c] < DENSITY_FLOOR {
                return [0.0, 0.0];
            }
            let (ix, iy) = spec.coords(c);
            let left = if ix > 0 { faces.mx[c - 1] } else { 0.0 };
            let vx = 0.5 * (left + faces.mx[c]) / fbar[c];
            let vy = if spec.dim() == 2 {
                let below = if iy > 0 { faces.my[c - spec.nx()] } else { 0.0 };
                0.5 * (below + faces.my[c]) / fbar[c]
            } else {
                0.0
            };
            [vx, vy]
        })
        .collect()
}

fn linf_faces(a: &GridDensity, b: &GridDensity, dt: f64) -> Result<(Faces, f64)> {
    let spec = a.spec();
    let h = spec.h();
    let (sa, sb) = (a.support(), b.support());
    let (mu, nu) = (grid_to_atoms(a)?, grid_to_atoms(b)?);
    let bottleneck = winf(&mu, &nu)?;
    let bound = bottleneck.value + 1e-9 * h;
    let plan = if mu.len().max(nu.len()) <= REFINE_ATOMS {
        let allowed = |i: usize, j: usize| {
            let (x, y) = (mu.points()[i], nu.points()[j]);
            (dist(x, y) <= bound).then(|| manhattan(x, y))
        };
        min_cost_plan(&mu, &nu, allowed).unwrap_or_else(|_| bottleneck.witness_plan.clone())
    } else {
        bottleneck.witness_plan.clone()
    };
    Ok((route(spec, &plan, &sa, &sb, dt), bottleneck.value / dt))
}

/// Face momenta of a plan whose pairs travel along lattice staircases that
/// stay closest to the straight segment.
fn route(spec: &GridSpec, plan: &Coupling, sa: &[usize], sb: &[usize], dt: f64) -> Faces {
    let mut faces = Faces::zeros(spec.len());
    let area = spec.h().powi(spec.dim() as i32 - 1);
    for &(i, j, w) in &plan.entries {
        let (ax, ay) = spec.coords(sa[i]);
        let (bx, by) = spec.coords(sb[j]);
        let (dx, dy) = (bx as isize - ax as isize, by as isize - ay as isize);
        let (nx, ny) = (dx.unsigned_abs(), dy.unsigned_abs());
        let m = w / dt / area;
        let (mut cx, mut cy) = (ax, ay);
        let (mut done_x, mut done_y) = (0usize, 0usize);
        while done_x < nx || done_y < ny {
            let take_x = done_y == ny
                || (done_x < nx && (done_x as f64 + 0.5) * ny as f64 <= (done_y as f64 + 0.5) * nx as f64);
            if take_x {
                if dx > 0 {
                    faces.mx[spec.index(cx, cy)] += m;
                    cx += 1;
                } else {
                    cx -= 1;
                    faces.mx[spec.index(cx, cy)] -= m;
                }
                done_x += 1;
            } else {
                if dy > 0 {
                    faces.my[spec.index(cx, cy)] += m;
                    cy += 1;
                } else {
                    cy -= 1;
                    faces.my[spec.index(cx, cy)] -= m;
                }
                done_y += 1;
            }
        }
    }
    faces
}

/// Interior faces between cells of the region, `(lo, hi, axis)`.
fn region_faces(spec: &GridSpec, inside: &[bool]) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for c in 0..spec.len() {
        if !inside[c] {
            continue;
        }
        let (ix, iy) = spec.coords(c);
        if ix + 1 < spec.nx() && inside[c + 1] {
            out.push((c, c + 1, 0));
        }
        if spec.dim() == 2 && iy + 1 < spec.ny() && inside[c + spec.nx()] {
            out.push((c, c + spec.nx(), 1));
        }
    }
    out
}

fn lq_faces(a: &GridDensity, b: &GridDensity, dt: f64, q: f64) -> Result<Faces> {
    let spec = a.spec();
    let n = spec.len();
    let vol = spec.cell_volume();
    let area = spec.h().powi(spec.dim() as i32 - 1);
    let mut inside = vec![false; n];
    for c in a.support().into_iter().chain(b.support()) {
        inside[c] = true;
        for nb in spec.neighbours(c) {
            if !spec.is_ring_index(nb) {
                inside[nb] = true;
            }
        }
    }
    let faces = region_faces(spec, &inside);
    // net outflow per cell, mass per unit time
    let r: Vec<f64> = (0..n).map(|c| -(b.values()[c] - a.values()[c]) * vol / dt).collect();
    let scale = r.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let mut out = Faces::zeros(n);
    if scale == 0.0 {
        return Ok(out);
    }
    let comps = components(n, &inside, &faces);
    for comp in comps.iter() {
        let total: f64 = comp.iter().map(|&c| r[c]).sum();
        if total.abs() > 1e-9 * scale * comp.len() as f64 {
            return Err(PlqpError::Infeasible(format!(
                "mass changes by {:.3e} on an isolated region; supports must overlap up to one cell",
                total * dt
            )));
        }
    }
    // face densities, floored so the dilated region stays connected
    let fbar: Vec<f64> = (0..n).map(|c| 0.5 * (a.values()[c] + b.values()[c])).collect();
    let floor = 1e-6 * fbar.iter().copied().fold(0.0, f64::max);
    let rho: Vec<f64> = faces.iter().map(|&(lo, hi, _)| (0.5 * (fbar[lo] + fbar[hi])).max(floor)).collect();
    let base: Vec<f64> = rho.iter().map(|&r| r.powf(q - 1.0)).collect();
    let mut cond = base.clone();
    let mut flux = vec![0.0; faces.len()];
    let iters = if q == 2.0 { 1 } else { IRLS_ITERS };
    let eps = 1e-8 * scale;
    for _ in 0..iters {
        let psi = solve_laplacian(n, &faces, &cond, &r, &comps);
        for (e, &(lo, hi, _)) in faces.iter().enumerate() {
            flux[e] = cond[e] * (psi[lo] - psi[hi]);
        }
        if q == 2.0 {
            break;
        }
        for e in 0..faces.len() {
            cond[e] = base[e] * (flux[e] * flux[e] + eps * eps).powf((2.0 - q) / 2.0);
        }
    }
    for (e, &(lo, _, axis)) in faces.iter().enumerate() {
        let m = flux[e] / area;
        if axis == 0 {
            out.mx[lo] = m;
        } else {
            out.my[lo] = m;
        }
    }
    Ok(out)
}

fn components(n: usize, inside: &[bool], faces: &[(usize, usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b, _) in faces {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if !inside[s] || seen[s] {
            continue;
        }
        seen[s] = true;
        let mut stack = vec![s];
        let mut comp = Vec::new();
        while let Some(c) = stack.pop() {
            comp.push(c);
            for &nb in &adj[c] {
                if !seen[nb] {
                    seen[nb] = true;
                    stack.push(nb);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Conjugate gradients for the weighted graph Laplacian, with the right-hand
/// side and iterates kept orthogonal to constants on each component.
fn solve_laplacian(
    n: usize,
    faces: &[(usize, usize, usize)],
    cond: &[f64],
    rhs: &[f64],
    comps: &[Vec<usize>],
) -> Vec<f64> {
    let apply = |x: &[f64], y: &mut [f64]| {
        y.iter_mut().for_each(|v| *v = 0.0);
        for (e, &(a, b, _)) in faces.iter().enumerate() {
            let f = cond[e] * (x[a] - x[b]);
            y[a] += f;
            y[b] -= f;
        }
    };
    let project = |x: &mut [f64]| {
        for comp in comps {
            let mean = comp.iter().map(|&c| x[c]).sum::<f64>() / comp.len() as f64;
            comp.iter().for_each(|&c| x[c] -= mean);
        }
    };
    let mut b = rhs.to_vec();
    let mut mask = vec![false; n];
    comps.iter().flatten().for_each(|&c| mask[c] = true);
    (0..n).filter(|&c| !mask[c]).for_each(|c| b[c] = 0.0);
    project(&mut b);
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    let mut x = vec![0.0; n];
    let mut r = b.clone();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let stop = CG_TOL * CG_TOL * rr;
    for _ in 0..(10 * n).max(100) {
        if rr <= stop {
            break;
        }
        apply(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        project(&mut r);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    x
}
