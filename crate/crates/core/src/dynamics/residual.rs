use serde::{Deserialize, Serialize};

use super::Trajectory;
use crate::error::{PlqpError, Result};
use crate::measures::{GridSpec, Point};

/// Version of the built-in test-function panel.
pub const PANEL_VERSION: u32 = 1;

/// Placements of the built-in panel as fractions of the grid domain:
/// `(center x, center y, half-width)`.
const PLACEMENTS: [(f64, f64, f64); 12] = [
    (0.50, 0.50, 0.40),
    (0.50, 0.50, 0.25),
    (0.50, 0.50, 0.15),
    (0.35, 0.50, 0.25),
    (0.65, 0.50, 0.25),
    (0.50, 0.35, 0.25),
    (0.50, 0.65, 0.25),
    (0.40, 0.40, 0.20),
    (0.60, 0.60, 0.20),
    (0.40, 0.60, 0.30),
    (0.60, 0.40, 0.30),
    (0.55, 0.45, 0.35),
];

/// Tensor bump `Π_a b((x_a − c_a)/s_a)`, `b(u) = exp(1 − 1/(1 − u²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub center: Point,
    pub half_width: Point,
}

fn bump(u: f64) -> (f64, f64) {
    if u.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let s = 1.0 - u * u;
    let b = (1.0 - 1.0 / s).exp();
    (b, -2.0 * u / (s * s) * b)
}

impl TestFunction {
    /// Value and gradient at `x`.
    pub fn eval(&self, dim: usize, x: Point) -> (f64, Point) {
        let (bx, dbx) = bump((x[0] - self.center[0]) / self.half_width[0]);
        if dim == 1 {
            return (bx, [dbx / self.half_width[0], 0.0]);
        }
        let (by, dby) = bump((x[1] - self.center[1]) / self.half_width[1]);
        (bx * by, [dbx / self.half_width[0] * by, bx * dby / self.half_width[1]])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestPanel {
    pub version: u32,
    pub functions: Vec<TestFunction>,
}

impl TestPanel {
    /// The fixed panel placed relative to the grid domain.
    pub fn standard(spec: &GridSpec) -> Self {
        let d = spec.domain();
        let ext = [d[0][1] - d[0][0], d[1][1] - d[1][0]];
        let functions = PLACEMENTS
            .iter()
            .map(|&(fx, fy, s)| TestFunction {
                center: [d[0][0] + fx * ext[0], d[1][0] + fy * ext[1]],
                half_width: [s * ext[0], (s * ext[1]).max(f64::MIN_POSITIVE)],
            })
            .collect();
        Self { version: PANEL_VERSION, functions }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub panel_version: u32,
    pub test_functions: Vec<TestFunction>,
    /// `defects[g][k]` on interval `[t_k, t_{k+1}]`.
    pub defects: Vec<Vec<f64>>,
    pub max_defect: f64,
    /// Largest over test functions of `Σ_k defect·Δt_k`.
    pub l1_defect: f64,
}

/// Weak-form continuity defects with the standard panel.
pub fn continuity_residual(traj: &Trajectory) -> Result<ResidualReport> {
    continuity_residual_with_panel(traj, &TestPanel::standard(traj.spec()))
}

/// Per interval compares `(G(t_{k+1}) − G(t_k))/Δt`, `G(t) = ∫g dμ_t`, with
/// the trapezoid mean of `∫⟨∇g, v_t⟩ dμ_t` at both ends.
pub fn continuity_residual_with_panel(traj: &Trajectory, panel: &TestPanel) -> Result<ResidualReport> {
    let field = traj.field().ok_or(PlqpError::MissingField)?;
    if traj.len() < 3 {
        return Err(PlqpError::TooFewSamples { needed: 3, got: traj.len() });
    }
    let spec = traj.spec();
    let vol = spec.cell_volume();
    let t = traj.times();
    let mut defects = Vec::with_capacity(panel.functions.len());
    for g in &panel.functions {
        let samples: Vec<(f64, Point)> = (0..spec.len()).map(|i| g.eval(spec.dim(), spec.center(i))).collect();
        let (mut big_g, mut flux) = (Vec::new(), Vec::new());
        for (k, d) in traj.densities().iter().enumerate() {
            let v = field.at(k);
            let mut a = 0.0;
            let mut b = 0.0;
            for i in d.support() {
                let f = d.values()[i];
                let (gv, gg) = samples[i];
                a += gv * f;
                b += (gg[0] * v[i][0] + gg[1] * v[i][1]) * f;
            }
            big_g.push(a * vol);
            flux.push(b * vol);
        }
        defects.push(
            (0..t.len() - 1)
                .map(|k| {
                    let dt = t[k + 1] - t[k];
                    ((big_g[k + 1] - big_g[k]) / dt - 0.5 * (flux[k] + flux[k + 1])).abs()
                })
                .collect::<Vec<f64>>(),
        );
    }
    let max_defect = defects.iter().flatten().copied().fold(0.0, f64::max);
    let l1_defect = defects
        .iter()
        .map(|d| d.iter().enumerate().map(|(k, e)| e * (t[k + 1] - t[k])).sum::<f64>())
        .fold(0.0, f64::max);
    Ok(ResidualReport {
        panel_version: panel.version,
        test_functions: panel.functions.clone(),
        defects,
        max_defect,
        l1_defect,
    })
}
