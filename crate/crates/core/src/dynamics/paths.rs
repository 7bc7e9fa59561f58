use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bottleneck::winf;
use crate::error::{PlqpError, Result};
use crate::measures::{dist, DiscreteMeasure, Point, WEIGHT_TOL};

/// Weighted polylines `ω_i: [0, 1] → ℝⁿ` with breakpoints at `k/S`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEnsemble {
    dim: usize,
    paths: Vec<Vec<Point>>,
    weights: Vec<f64>,
}

impl PathEnsemble {
    pub fn new(dim: usize, paths: Vec<Vec<Point>>, weights: Vec<f64>) -> Result<Self> {
        if paths.is_empty() || paths.len() != weights.len() {
            return Err(PlqpError::InvalidMeasure("paths and weights must be nonempty and aligned".into()));
        }
        let s = paths[0].len();
        if s < 2 || paths.iter().any(|p| p.len() != s) {
            return Err(PlqpError::InvalidMeasure("paths must share a breakpoint count >= 2".into()));
        }
        if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(PlqpError::InvalidMeasure("weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(PlqpError::InvalidMeasure(format!("weights sum to {total}")));
        }
        Ok(Self { dim, paths, weights })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn paths(&self) -> &[Vec<Point>] {
        &self.paths
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn segments(&self) -> usize {
        self.paths[0].len() - 1
    }

    /// Lipschitz constant of path `i` under the uniform parametrization.
    pub fn action(&self, i: usize) -> f64 {
        let s = self.segments() as f64;
        self.paths[i].windows(2).map(|w| dist(w[0], w[1])).fold(0.0, f64::max) * s
    }

    /// Largest action over the paths.
    pub fn sup_action(&self) -> f64 {
        (0..self.paths.len()).map(|i| self.action(i)).fold(0.0, f64::max)
    }

    /// Law of `ω(k/S)`.
    pub fn marginal(&self, k: usize) -> Result<DiscreteMeasure> {
        DiscreteMeasure::new(self.dim, self.paths.iter().map(|p| p[k]).collect(), self.weights.clone())
    }

    /// Whether `|ω(1) − ω(0)| ≤ A(ω)` on every path.
    pub fn endpoint_bound_holds(&self) -> bool {
        (0..self.paths.len()).all(|i| {
            let p = &self.paths[i];
            dist(p[0], p[p.len() - 1]) <= self.action(i) * (1.0 + 1e-12) + 1e-15
        })
    }
}

/// Straight constant-speed paths along a bottleneck plan; returns the
/// ensemble and its sup-action, which equals `W_∞(μ, ν)`.
pub fn action_minimize(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<(PathEnsemble, f64)> {
    let w = winf(mu, nu)?;
    let total: f64 = w.witness_plan.entries.iter().map(|e| e.2).sum();
    let paths = w.witness_plan.entries.iter().map(|&(i, j, _)| vec![mu.points()[i], nu.points()[j]]).collect();
    let weights = w.witness_plan.entries.iter().map(|e| e.2 / total).collect();
    let ens = PathEnsemble::new(mu.dim(), paths, weights)?;
    if !ens.endpoint_bound_holds() {
        return Err(PlqpError::Infeasible("path action below endpoint distance".into()));
    }
    let a = ens.sup_action();
    Ok((ens, a))
}

/// Atoms left of `split` follow the half turn about the origin,
/// `t ↦ (x cos πt − y sin πt, x sin πt + y cos πt)`; the others translate,
/// `t ↦ (x + t·shift, y)`. Sampled at `segments + 1` breakpoints.
pub fn half_turn_and_shift_ensemble(
    mu: &DiscreteMeasure,
    split: f64,
    shift: f64,
    segments: usize,
) -> Result<PathEnsemble> {
    if segments == 0 {
        return Err(PlqpError::InvalidParameter("segments must be positive".into()));
    }
    let paths = mu
        .points()
        .iter()
        .map(|&[x, y]| {
            (0..=segments)
                .map(|k| {
                    let t = k as f64 / segments as f64;
                    if x < split {
                        let (s, c) = (PI * t).sin_cos();
                        [x * c - y * s, x * s + y * c]
                    } else {
                        [x + t * shift, y]
                    }
                })
                .collect()
        })
        .collect();
    PathEnsemble::new(mu.dim(), paths, mu.weights().to_vec())
}
