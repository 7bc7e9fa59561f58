use std::collections::HashMap;

use rayon::prelude::*;

use super::{CrossCheck, DistanceParts, Family, ResolventDiagnostics, ResolventOutcome, ResolventProblem};
use crate::error::{PlqpError, Result};
use crate::measures::{dist, GridDensity, GridSpec, Point};

const SYMMETRY_TOL: f64 = 1e-9;
const SNAP_TOL: f64 = 1e-6;

struct Component {
    cells: Vec<usize>,
    anchor: Vec<f64>,
    /// Radius over the component's largest radius.
    level: Vec<f64>,
    center: Point,
    /// The anchor restricted to this component, on the full grid.
    own: Vec<f64>,
    mass: f64,
    /// Local indices sorted by radius, and the sorted radii.
    order: Vec<usize>,
    radii: Vec<f64>,
    /// Local indices of `(s, s + e_x, s + e_y)` for each stencil cell `s`.
    stencil: Vec<[Option<usize>; 3]>,
}

#[derive(Debug, Clone, Copy)]
struct Stats {
    num: f64,
    den: f64,
    transport: f64,
    lebesgue: f64,
}

struct Setup<'a> {
    prob: &'a ResolventProblem,
    comps: Vec<Component>,
    knots: usize,
    ladder: usize,
    step: f64,
}

/// 8-connected components of the support.
fn components(g: &GridDensity) -> Vec<Vec<usize>> {
    let spec = g.spec();
    let (nx, ny) = (spec.nx() as isize, spec.ny() as isize);
    let mut label = vec![usize::MAX; spec.len()];
    let mut out = Vec::new();
    for start in g.support() {
        if label[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut cells = vec![start];
        label[start] = id;
        let mut k = 0;
        while k < cells.len() {
            let (ix, iy) = spec.coords(cells[k]);
            for dy in -1..=1isize {
                for dx in -1..=1isize {
                    let (jx, jy) = (ix as isize + dx, iy as isize + dy);
                    if jx < 0 || jy < 0 || jx >= nx || jy >= ny {
                        continue;
                    }
                    let j = spec.index(jx as usize, jy as usize);
                    if g.values()[j] > 0.0 && label[j] == usize::MAX {
                        label[j] = id;
                        cells.push(j);
                    }
                }
            }
            k += 1;
        }
        cells.sort_unstable();
        out.push(cells);
    }
    out
}

/// Centroid snapped to a cell center or corner, in doubled fractional
/// coordinates.
fn snapped_center(spec: &GridSpec, values: &[f64], cells: &[usize]) -> Result<[i64; 2]> {
    let mut m = 0.0;
    let mut c = [0.0; 2];
    for &i in cells {
        let x = spec.fractional(spec.center(i));
        m += values[i];
        c[0] += values[i] * x[0];
        c[1] += values[i] * x[1];
    }
    let mut out = [0i64; 2];
    for a in 0..spec.dim() {
        let d = 2.0 * c[a] / m;
        if (d - d.round()).abs() > SNAP_TOL {
            return Err(PlqpError::FamilyInfeasible(format!("component centroid {:.6} is not a lattice symmetry point", c[a] / m)));
        }
        out[a] = d.round() as i64;
    }
    if spec.dim() == 2 && (out[0] - out[1]).rem_euclid(2) != 0 {
        return Err(PlqpError::FamilyInfeasible("component center mixes cell-center and corner parity".into()));
    }
    Ok(out)
}

fn check_symmetry(spec: &GridSpec, values: &[f64], cells: &[usize], c2: [i64; 2]) -> Result<()> {
    let vmax = cells.iter().map(|&i| values[i]).fold(0.0, f64::max);
    let at = |x2: i64, y2: i64| -> f64 {
        if x2.rem_euclid(2) != 0 || y2.rem_euclid(2) != 0 {
            return f64::NAN;
        }
        let ix = x2 / 2;
        let iy = y2 / 2;
        if ix < 0 || iy < 0 || ix >= spec.nx() as i64 || iy >= spec.ny() as i64 {
            return 0.0;
        }
        values[spec.index(ix as usize, iy as usize)]
    };
    for &i in cells {
        let (ix, iy) = spec.coords(i);
        let (dx, dy) = (2 * ix as i64 - c2[0], 2 * iy as i64 - c2[1]);
        let images: Vec<(i64, i64)> = if spec.dim() == 1 {
            vec![(-dx, 0)]
        } else {
            vec![(-dx, dy), (dx, -dy), (-dx, -dy), (dy, dx), (-dy, dx), (dy, -dx), (-dy, -dx)]
        };
        for (ex, ey) in images {
            let v = at(c2[0] + ex, c2[1] + ey);
            if !((v - values[i]).abs() <= SYMMETRY_TOL * vmax) {
                return Err(PlqpError::FamilyInfeasible("component is not symmetric about its center".into()));
            }
        }
    }
    Ok(())
}

fn build_component(spec: &GridSpec, values: &[f64], cells: Vec<usize>) -> Result<Component> {
    let c2 = snapped_center(spec, values, &cells)?;
    check_symmetry(spec, values, &cells, c2)?;
    let origin = spec.origin();
    let h = spec.h();
    let center: Point = if spec.dim() == 1 {
        [origin[0] + 0.5 * c2[0] as f64 * h, 0.0]
    } else {
        [origin[0] + 0.5 * c2[0] as f64 * h, origin[1] + 0.5 * c2[1] as f64 * h]
    };
    let anchor: Vec<f64> = cells.iter().map(|&i| values[i]).collect();
    let mass = anchor.iter().sum::<f64>() * spec.cell_volume();
    let r: Vec<f64> = cells.iter().map(|&i| dist(spec.center(i), center)).collect();
    let mut order: Vec<usize> = (0..cells.len()).collect();
    order.sort_by(|&a, &b| r[a].total_cmp(&r[b]).then(a.cmp(&b)));
    let rmax = r.iter().copied().fold(0.0, f64::max);
    let level = r.iter().map(|&x| if rmax > 0.0 { x / rmax } else { 0.0 }).collect();
    let radii = order.iter().map(|&k| r[k]).collect();
    let local: HashMap<usize, usize> = cells.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let nx = spec.nx();
    let mut stencil_cells: Vec<usize> = Vec::new();
    for &i in &cells {
        let (ix, iy) = spec.coords(i);
        stencil_cells.push(i);
        if ix > 0 {
            stencil_cells.push(i - 1);
        }
        if iy > 0 && spec.dim() == 2 {
            stencil_cells.push(i - nx);
        }
    }
    stencil_cells.sort_unstable();
    stencil_cells.dedup();
    let stencil = stencil_cells
        .iter()
        .map(|&s| {
            let (ix, iy) = spec.coords(s);
            let right = (ix + 1 < nx).then(|| s + 1).and_then(|j| local.get(&j).copied());
            let up = (spec.dim() == 2 && iy + 1 < spec.ny()).then(|| s + nx).and_then(|j| local.get(&j).copied());
            [local.get(&s).copied(), right, up]
        })
        .collect();
    let mut own = vec![0.0; spec.len()];
    for (&i, &v) in cells.iter().zip(&anchor) {
        own[i] = v;
    }
    Ok(Component { cells, anchor, level, center, own, mass, order, radii, stencil })
}

impl Setup<'_> {
    fn per_component(&self) -> usize {
        self.ladder.pow(self.knots as u32)
    }

    fn levels(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.knots];
        for k in (0..self.knots).rev() {
            out[k] = idx % self.ladder;
            idx /= self.ladder;
        }
        out
    }

    fn knot(&self, l: usize) -> f64 {
        1.0 + (l as f64 - (self.ladder / 2) as f64) * self.step
    }

    /// Ring-height multiplier at normalized radius `u`; the center knot is
    /// pinned at 1 since the overall scale is fixed by renormalization.
    fn multiplier(&self, levels: &[usize], u: f64) -> f64 {
        let knot = |k: usize| if k == 0 { 1.0 } else { self.knot(levels[k]) };
        let t = u * (self.knots - 1) as f64;
        let k = (t.floor() as usize).min(self.knots - 2);
        let a = t - k as f64;
        (1.0 - a) * knot(k) + a * knot(k + 1)
    }

    fn is_identity(&self, levels: &[usize]) -> bool {
        levels.iter().all(|&l| l == self.ladder / 2)
    }

    /// `levels[0]` dilates the component about its center by
    /// `s = knot(levels[0])` (truncated to the component's cells), the rest
    /// set the ring heights; the result carries the component's mass.
    fn values(&self, comp: &Component, levels: &[usize]) -> Vec<f64> {
        if self.is_identity(levels) {
            return comp.anchor.clone();
        }
        let spec = self.prob.anchor.spec();
        let s = self.knot(levels[0]);
        let c = comp.center;
        let mut v: Vec<f64> = comp
            .cells
            .iter()
            .zip(&comp.level)
            .map(|(&i, &u)| {
                let x = spec.center(i);
                let y = [c[0] + (x[0] - c[0]) / s, c[1] + (x[1] - c[1]) / s];
                spec.interpolate(&comp.own, y).max(0.0) * self.multiplier(levels, u)
            })
            .collect();
        let total = v.iter().sum::<f64>() * spec.cell_volume();
        if !(total > 0.0) {
            return comp.anchor.clone();
        }
        let scale = comp.mass / total;
        v.iter_mut().for_each(|x| *x *= scale);
        v
    }

    fn stats(&self, comp: &Component, vals: &[f64]) -> Stats {
        let spec = self.prob.anchor.spec();
        let get = |o: Option<usize>| o.map_or(0.0, |k| vals[k]);
        let jumps = comp.stencil.iter().map(|s| {
            let v = get(s[0]);
            let dx = get(s[1]) - v;
            let dy = get(s[2]) - v;
            (dx * dx + dy * dy).sqrt()
        });
        let (num, den) = self.prob.phi.sums(spec, jumps, vals.iter().copied());
        let p = self.prob.metric.p;
        let diffs = vals.iter().zip(&comp.anchor).map(|(a, b)| (a - b).abs());
        let lebesgue = if p.is_infinite() {
            diffs.fold(0.0, f64::max)
        } else {
            diffs.map(|d| d.powf(p)).sum::<f64>() * spec.cell_volume()
        };
        let transport = radial_walk(comp, vals, self.prob.metric.q);
        Stats { num, den, transport, lebesgue }
    }

    fn combine(&self, parts: impl Iterator<Item = (usize, Stats)>) -> (f64, DistanceParts) {
        let (q, p) = (self.prob.metric.q, self.prob.metric.p);
        let (mut num, mut den, mut w, mut l) = (0.0, 0.0, 0.0f64, 0.0f64);
        for (j, s) in parts {
            num += s.num;
            den += s.den;
            if q.is_infinite() {
                w = w.max(s.transport);
            } else {
                w += self.comps[j].mass * s.transport;
            }
            if p.is_infinite() {
                l = l.max(s.lebesgue);
            } else {
                l += s.lebesgue;
            }
        }
        let transport = if q.is_infinite() { w } else { w.powf(1.0 / q) };
        let lebesgue = if p.is_infinite() { l } else { l.powf(1.0 / p) };
        let phi = self.prob.phi.combine(num, den, self.prob.anchor.spec().dim() as f64);
        (phi, DistanceParts { transport, lebesgue, total: transport + lebesgue })
    }
}

/// Radial transport between a reweighting of a component and its anchor
/// (same cells, same total mass): bottleneck for `q = ∞`, otherwise the
/// normalized `Σ flow·d^q`.
fn radial_walk(comp: &Component, vals: &[f64], q: f64) -> f64 {
    let ta: f64 = vals.iter().sum();
    let tb: f64 = comp.anchor.iter().sum();
    let n = comp.order.len();
    let wa = |k: usize| vals[comp.order[k]] / ta;
    let wb = |k: usize| comp.anchor[comp.order[k]] / tb;
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (wa(0), wb(0));
    let mut acc = 0.0f64;
    loop {
        let f = ra.min(rb);
        if f > 1e-13 {
            let d = (comp.radii[i] - comp.radii[j]).abs();
            if q.is_infinite() {
                acc = acc.max(d);
            } else {
                acc += f * d.powf(q);
            }
        }
        ra -= f;
        rb -= f;
        let (adv_a, adv_b) = (ra <= 1e-13, rb <= 1e-13);
        if adv_a {
            i += 1;
            if i == n {
                break;
            }
            ra += wa(i);
        }
        if adv_b {
            j += 1;
            if j == n {
                break;
            }
            rb += wb(j);
        }
    }
    acc
}

fn setup(prob: &ResolventProblem) -> Result<Setup<'_>> {
    let Family::Radial { rings, ladder, step, .. } = &prob.family else {
        unreachable!("radial setup on a non-radial family")
    };
    if !(2..=8).contains(rings) {
        return Err(PlqpError::InvalidParameter(format!("rings = {rings} must lie in 2..=8")));
    }
    if *ladder < 2 {
        return Err(PlqpError::InvalidParameter("ladder needs at least 2 levels".into()));
    }
    if !(*step > 0.0 && step * (*ladder / 2) as f64 <= 0.95) {
        return Err(PlqpError::InvalidParameter(format!("step {step} must keep multipliers positive")));
    }
    let spec = prob.anchor.spec();
    let comps = components(&prob.anchor)
        .into_iter()
        .map(|cells| build_component(spec, prob.anchor.values(), cells))
        .collect::<Result<Vec<_>>>()?;
    Ok(Setup { prob, comps, knots: *rings, ladder: *ladder, step: *step })
}

pub(super) fn resolve(prob: &ResolventProblem) -> Result<ResolventOutcome> {
    let Family::Radial { crosscheck_every, max_candidates, .. } = &prob.family else { unreachable!() };
    let s = setup(prob)?;
    let per = s.per_component();
    let total = s
        .comps
        .iter()
        .try_fold(1usize, |acc, _| acc.checked_mul(per))
        .filter(|&t| t <= *max_candidates)
        .ok_or_else(|| {
            PlqpError::FamilyInfeasible(format!(
                "{} components x {per} candidates exceed the candidate cap {max_candidates}",
                s.comps.len()
            ))
        })?;
    let tables: Vec<Vec<Stats>> = s
        .comps
        .iter()
        .map(|c| (0..per).into_par_iter().map(|k| s.stats(c, &s.values(c, &s.levels(k)))).collect())
        .collect();
    let ncomp = s.comps.len();
    let decode = |mut idx: usize| {
        let mut out = vec![0; ncomp];
        for j in (0..ncomp).rev() {
            out[j] = idx % per;
            idx /= per;
        }
        out
    };
    let eval = |idx: usize| {
        let ks = decode(idx);
        let (phi, d) = s.combine(ks.iter().enumerate().map(|(j, &k)| (j, tables[j][k])));
        phi + d.total * d.total / (2.0 * prob.tau)
    };
    let (best_phi_moreau, best) = (0..total)
        .into_par_iter()
        .with_min_len(4096)
        .map(|idx| (eval(idx), idx))
        .reduce(|| (f64::INFINITY, usize::MAX), |a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
    let ks = decode(best);
    let (phi, distance) = s.combine(ks.iter().enumerate().map(|(j, &k)| (j, tables[j][k])));
    let mut values = vec![0.0; prob.anchor.spec().len()];
    let mut params = Vec::new();
    for (j, c) in s.comps.iter().enumerate() {
        let lv = s.levels(ks[j]);
        for (&cell, v) in c.cells.iter().zip(s.values(c, &lv)) {
            values[cell] = v;
        }
        params.push(lv);
    }
    let state = GridDensity::new(prob.anchor.spec().clone(), values)?;
    let crosscheck: Option<CrossCheck> = if *crosscheck_every > 0 {
        Some(super::exact_distance(&state, &prob.anchor, &prob.metric, prob.atom_cap)?)
    } else {
        None
    };
    Ok(ResolventOutcome {
        state,
        phi,
        moreau: best_phi_moreau,
        distance,
        diagnostics: ResolventDiagnostics {
            family: prob.family.describe(),
            candidates_evaluated: total as u64,
            best_parameters: params,
            accepted_moves: 0,
            crosscheck,
        },
    })
}

/// Evaluates one member of the radial family: knot levels per component.
/// Returns the candidate state and its `Φ` under the family metric.
pub fn radial_candidate(prob: &ResolventProblem, levels: &[Vec<usize>]) -> Result<(GridDensity, f64)> {
    if !matches!(prob.family, Family::Radial { .. }) {
        return Err(PlqpError::InvalidParameter("not a radial family".into()));
    }
    let s = setup(prob)?;
    if levels.len() != s.comps.len() || levels.iter().any(|l| l.len() != s.knots || l.iter().any(|&x| x >= s.ladder)) {
        return Err(PlqpError::InvalidParameter("level vector does not match the family".into()));
    }
    let mut values = vec![0.0; prob.anchor.spec().len()];
    let mut stats = Vec::new();
    for (j, c) in s.comps.iter().enumerate() {
        let v = s.values(c, &levels[j]);
        stats.push((j, s.stats(c, &v)));
        for (&cell, x) in c.cells.iter().zip(v) {
            values[cell] = x;
        }
    }
    let (phi, d) = s.combine(stats.into_iter());
    let state = GridDensity::new(prob.anchor.spec().clone(), values)?;
    Ok((state, phi + d.total * d.total / (2.0 * prob.tau)))
}
