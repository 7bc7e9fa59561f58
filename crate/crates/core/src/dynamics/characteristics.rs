use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FieldSource, Trajectory};
use crate::error::{PlqpError, Result};
use crate::measures::{coarse_atoms, DiscreteMeasure, GridSpec, Point};
use crate::transport::wq;

/// Atom budget for the terminal comparison.
const COMPARE_ATOMS: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicsReport {
    pub particles: usize,
    pub initial: Vec<Point>,
    pub terminal: Vec<Point>,
    /// `W_1` between the binned terminal cloud and the binned final density.
    pub w1: f64,
    /// Cells per block used for both binnings.
    pub block_factor: usize,
    /// Quantization of the binning, `block_factor·h·√n/2` per side.
    pub quantization_bound: f64,
}

/// Systematic sample: particle `k` sits at the center of the cell holding
/// the `(k + ½)/N` quantile of the cumulative cell masses.
fn systematic_sample(spec: &GridSpec, values: &[f64], n: usize) -> Vec<Point> {
    let vol = spec.cell_volume();
    let mut out = Vec::with_capacity(n);
    let mut cum = 0.0;
    let mut k = 0;
    let total: f64 = values.iter().sum::<f64>() * vol;
    for (i, &v) in values.iter().enumerate() {
        cum += v * vol / total;
        while k < n && (k as f64 + 0.5) / n as f64 <= cum {
            out.push(spec.center(i));
            k += 1;
        }
    }
    let last = (0..values.len()).rev().find(|&i| values[i] > 0.0).unwrap_or(0);
    while out.len() < n {
        out.push(spec.center(last));
    }
    out
}

fn inside(spec: &GridSpec, x: Point) -> bool {
    let f = spec.fractional(x);
    let ok_x = f[0] >= 0.0 && f[0] <= (spec.nx() - 1) as f64;
    ok_x && (spec.dim() == 1 || (f[1] >= 0.0 && f[1] <= (spec.ny() - 1) as f64))
}

/// Block-binned empirical measure with the geometry of `block_atoms`.
fn bin_cloud(spec: &GridSpec, cloud: &[Point], factor: usize) -> Result<DiscreteMeasure> {
    let mut blocks: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for &x in cloud {
        let f = spec.fractional(x);
        let ix = (f[0].round().max(0.0) as usize).min(spec.nx() - 1);
        let iy = (f[1].round().max(0.0) as usize).min(spec.ny() - 1);
        *blocks.entry((iy / factor, ix / factor)).or_insert(0.0) += 1.0;
    }
    let offset = 0.5 * (factor as f64 - 1.0) * spec.h();
    let points = blocks
        .keys()
        .map(|&(by, bx)| {
            let c = spec.center_of(bx * factor, by * factor);
            if spec.dim() == 1 { [c[0] + offset, 0.0] } else { [c[0] + offset, c[1] + offset] }
        })
        .collect();
    DiscreteMeasure::normalized(spec.dim(), points, blocks.values().copied().collect())
}

/// Pushes `N` particles sampled from `μ_0` through `ẋ = v_t(x)` with the
/// midpoint rule, sub-stepping each interval so that a step moves at most
/// `h/2`, and compares the terminal cloud with `μ_T`.
pub fn trace_characteristics(traj: &Trajectory, samples: usize) -> Result<CharacteristicsReport> {
    let field = traj.field().ok_or(PlqpError::MissingField)?;
    if samples == 0 {
        return Err(PlqpError::InvalidParameter("need at least one particle".into()));
    }
    let spec = traj.spec();
    let h = spec.h();
    let t = traj.times();
    let initial = systematic_sample(spec, traj.densities()[0].values(), samples);
    let substeps: Vec<usize> = (0..t.len() - 1)
        .map(|k| {
            let vmax = (0..spec.len())
                .map(|i| super::norm(field.at(k)[i]).max(super::norm(field.at(k + 1)[i])))
                .fold(0.0, f64::max);
            ((vmax * (t[k + 1] - t[k]) / (0.5 * h)).ceil() as usize).max(1)
        })
        .collect();
    let terminal = initial
        .par_iter()
        .map(|&x0| {
            let mut x = x0;
            for k in 0..t.len() - 1 {
                let dt = (t[k + 1] - t[k]) / substeps[k] as f64;
                for s in 0..substeps[k] {
                    let ts = t[k] + s as f64 * dt;
                    let v = field.velocity(ts, x);
                    let mid = [x[0] + 0.5 * dt * v[0], x[1] + 0.5 * dt * v[1]];
                    let w = field.velocity(ts + 0.5 * dt, mid);
                    x = [x[0] + dt * w[0], x[1] + dt * w[1]];
                    if !inside(spec, x) {
                        return Err(PlqpError::SupportExitsGrid(format!("particle leaves the grid near t = {ts}")));
                    }
                }
            }
            Ok(x)
        })
        .collect::<Result<Vec<Point>>>()?;
    let (target, factor) = coarse_atoms(traj.densities().last().unwrap(), COMPARE_ATOMS)?;
    let cloud = bin_cloud(spec, &terminal, factor)?;
    let w1 = wq(&cloud, &target, 1.0)?.cost;
    Ok(CharacteristicsReport {
        particles: samples,
        initial,
        terminal,
        w1,
        block_factor: factor,
        quantization_bound: factor as f64 * spec.quantization_bound(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{dilate_curve, translate_curve};
    use crate::testutil::ramp;

    #[test]
    fn zero_field_keeps_particles() {
        let spec = GridSpec::square(-2.0, 2.0, 24).unwrap();
        let g = ramp(&spec, [0.0, 0.0], 1.0, 0.4).unwrap();
        let tr = translate_curve(&g, [0.0, 0.0], &[0.0, 0.5, 1.0]).unwrap();
        let r = trace_characteristics(&tr, 2000).unwrap();
        assert_eq!(r.initial, r.terminal);
        assert!(r.w1 <= 2.0 * r.quantization_bound, "{}", r.w1);
    }

    #[test]
    fn translation_moves_cloud() {
        let spec = GridSpec::square(-2.0, 2.0, 32).unwrap();
        let g = ramp(&spec, [-0.5, 0.0], 0.8, 0.4).unwrap();
        let tr = translate_curve(&g, [1.0, 0.0], &[0.0, 0.25, 0.5, 0.75, 1.0]).unwrap();
        let r = trace_characteristics(&tr, 4000).unwrap();
        for (a, b) in r.initial.iter().zip(&r.terminal) {
            assert!((b[0] - a[0] - 1.0).abs() < 1e-9 && (b[1] - a[1]).abs() < 1e-9);
        }
        assert!(r.w1 <= 0.3, "{}", r.w1);
    }

    #[test]
    fn dilation_scales_radii() {
        let spec = GridSpec::square(-3.0, 3.0, 128).unwrap();
        let g = ramp(&spec, [0.0, 0.0], 1.2, 0.8).unwrap();
        let times: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        let tr = dilate_curve(&g, 2.0, &times).unwrap();
        let r = trace_characteristics(&tr, 1000).unwrap();
        for (a, b) in r.initial.iter().zip(&r.terminal) {
            let (r0, r1) = (a[0].hypot(a[1]), b[0].hypot(b[1]));
            if r0 > 1e-12 {
                assert!((r1 / r0 / 2.0 - 1.0).abs() < 0.05);
            }
        }
    }

    #[test]
    fn sample_follows_mass() {
        let spec = GridSpec::interval(0.0, 1.0, 10).unwrap();
        let mut v = vec![0.0; 10];
        v[2] = 2.5;
        v[7] = 7.5;
        let pts = systematic_sample(&spec, &v, 100);
        let left = pts.iter().filter(|p| p[0] < 0.5).count();
        assert_eq!(left, 25);
    }
}
