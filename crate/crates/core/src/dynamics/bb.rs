use serde::{Deserialize, Serialize};

use super::{reconstruct_velocity, Trajectory, VelocityNorm};
use crate::bottleneck::winf;
use crate::error::{PlqpError, Result};
use crate::measures::{dist, grid_to_atoms, GridDensity};
use crate::transport::{min_cost_plan, Coupling};

/// Slack on the lower-bound comparison.
const LOWER_TOL: f64 = 1e-6;
/// Deposits below this weight are dropped.
const DEPOSIT_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BbReport {
    pub steps: usize,
    pub horizon: f64,
    /// Endpoint bottleneck distance.
    pub winf: f64,
    /// Reconstructed sup-norm per step.
    pub per_step_norm: Vec<f64>,
    /// `horizon · max_k per_step_norm[k]`.
    pub action: f64,
    pub tolerance: f64,
    /// Allowed excess of `action` over `winf` for the interpolation.
    pub grid_tolerance: f64,
    pub quantization_bound: f64,
    pub lower_bound_holds: bool,
    pub upper_bound_holds: bool,
}

/// Bottleneck plan re-optimized for quadratic cost among pairs within the
/// bottleneck value, which straightens the interpolation.
fn interpolation_plan(mu0: &GridDensity, mu1: &GridDensity) -> Result<(Coupling, f64)> {
    let (a, b) = (grid_to_atoms(mu0)?, grid_to_atoms(mu1)?);
    let w = winf(&a, &b)?;
    let bound = w.value + 1e-9 * mu0.spec().h();
    let allowed = |i: usize, j: usize| {
        let d = dist(a.points()[i], b.points()[j]);
        (d <= bound).then_some(d * d)
    };
    let plan = min_cost_plan(&a, &b, allowed).unwrap_or(w.witness_plan);
    Ok((plan, w.value))
}

/// `μ_t = (e_t)#γ`, `e_t(x, y) = (1−t)x + ty`, for `γ` a bottleneck plan,
/// at `t = k/steps`, each atom deposited by area weighting. The end points
/// are the inputs themselves.
pub fn displacement_interpolation(mu0: &GridDensity, mu1: &GridDensity, steps: usize) -> Result<Trajectory> {
    if mu0.spec() != mu1.spec() {
        return Err(PlqpError::SpecMismatch);
    }
    if steps == 0 {
        return Err(PlqpError::InvalidParameter("steps must be positive".into()));
    }
    let spec = mu0.spec();
    let (plan, _) = interpolation_plan(mu0, mu1)?;
    let (sa, sb) = (mu0.support(), mu1.support());
    let vol = spec.cell_volume();
    let (nx, ny) = (spec.nx() as isize, spec.ny() as isize);
    let mut densities = vec![mu0.clone()];
    for k in 1..steps {
        let t = k as f64 / steps as f64;
        let mut vals = vec![0.0; spec.len()];
        for &(i, j, w) in &plan.entries {
            let (x, y) = (spec.center(sa[i]), spec.center(sb[j]));
            let p = [(1.0 - t) * x[0] + t * y[0], (1.0 - t) * x[1] + t * y[1]];
            for (ix, iy, a) in spec.deposit_weights(p) {
                if a <= DEPOSIT_FLOOR {
                    continue;
                }
                if ix < 0 || iy < 0 || ix >= nx || iy >= ny {
                    return Err(PlqpError::SupportExitsGrid("interpolated atom leaves the grid".into()));
                }
                vals[spec.index(ix as usize, iy as usize)] += a * w / vol;
            }
        }
        densities.push(GridDensity::normalized(spec.clone(), vals)?);
    }
    densities.push(mu1.clone());
    let times = (0..=steps).map(|k| k as f64 / steps as f64).collect();
    Trajectory::new(times, densities, None)
}

/// Compares the endpoint bottleneck distance with the sup-norm action of
/// the displacement interpolation over `[0, 1]`.
pub fn bb_verify(mu0: &GridDensity, mu1: &GridDensity, steps: usize) -> Result<BbReport> {
    let traj = displacement_interpolation(mu0, mu1, steps)?;
    let (_, w) = interpolation_plan(mu0, mu1)?;
    let rec = reconstruct_velocity(&traj, VelocityNorm::Linf)?;
    let horizon = 1.0;
    let action = horizon * rec.per_step_norm.iter().copied().fold(0.0, f64::max);
    let h = mu0.spec().h();
    let grid_tolerance = 2.0 * h;
    Ok(BbReport {
        steps,
        horizon,
        winf: w,
        per_step_norm: rec.per_step_norm,
        action,
        tolerance: LOWER_TOL,
        grid_tolerance,
        quantization_bound: mu0.spec().quantization_bound(),
        lower_bound_holds: action >= w - LOWER_TOL,
        upper_bound_holds: action <= w + grid_tolerance,
    })
}
