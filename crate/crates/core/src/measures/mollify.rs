use serde::{Deserialize, Serialize};

use crate::error::{PlqpError, Result};
use crate::measures::grid::GridDensity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    /// Truncated at four widths.
    Gaussian,
    /// Tent of half-width `σ`.
    Triangular,
}

/// Separable smoothing kernel used to build test fixtures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MollifierConfig {
    pub width: f64,
    pub kernel: Kernel,
}

impl MollifierConfig {
    pub fn gaussian(width: f64) -> Self {
        Self { width, kernel: Kernel::Gaussian }
    }
    pub fn triangular(width: f64) -> Self {
        Self { width, kernel: Kernel::Triangular }
    }

    /// Normalized 1D taps `k_{-J..=J}` for grid spacing `h`.
    pub fn taps(&self, h: f64) -> Vec<f64> {
        let s = self.width;
        let (radius, f): (usize, Box<dyn Fn(f64) -> f64>) = match self.kernel {
            Kernel::Gaussian => ((4.0 * s / h).ceil() as usize, Box::new(move |x: f64| (-x * x / (2.0 * s * s)).exp())),
            Kernel::Triangular => ((s / h).ceil() as usize, Box::new(move |x: f64| (1.0 - x.abs() / s).max(0.0))),
        };
        let raw: Vec<f64> = (-(radius as isize)..=radius as isize).map(|j| f(j as f64 * h)).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|k| k / total).collect()
    }
}

/// Discrete convolution with the mollifier, renormalized to unit mass.
pub fn mollify(g: &GridDensity, cfg: &MollifierConfig) -> Result<GridDensity> {
    let spec = g.spec();
    if !(cfg.width >= spec.h()) {
        return Err(PlqpError::InvalidParameter(format!(
            "mollifier width {} below grid spacing {}",
            cfg.width,
            spec.h()
        )));
    }
    let taps = cfg.taps(spec.h());
    let radius = (taps.len() / 2) as isize;
    let (nx, ny) = (spec.nx() as isize, spec.ny() as isize);
    let mut cur = g.values().to_vec();
    let axes: &[(isize, isize)] = if spec.dim() == 1 { &[(1, 0)] } else { &[(1, 0), (0, 1)] };
    for &(dx, dy) in axes {
        let mut next = vec![0.0; cur.len()];
        for iy in 0..ny {
            for ix in 0..nx {
                let v = cur[spec.index(ix as usize, iy as usize)];
                if v == 0.0 {
                    continue;
                }
                for (k, &w) in taps.iter().enumerate() {
                    let off = k as isize - radius;
                    let (jx, jy) = (ix + off * dx, iy + off * dy);
                    if jx <= 0 || jy < 0 || jx >= nx - 1 || jy >= ny || (spec.dim() == 2 && (jy == 0 || jy == ny - 1)) {
                        return Err(PlqpError::SupportExitsGrid("mollified support reaches the boundary ring".into()));
                    }
                    next[spec.index(jx as usize, jy as usize)] += w * v;
                }
            }
        }
        cur = next;
    }
    GridDensity::normalized(spec.clone(), cur)
}
