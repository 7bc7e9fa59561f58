//! Translation and dilation curves with their generating fields.

use crate::dynamics::{ConstantField, DilationField, Trajectory, VelocityField};
use crate::error::{PlqpError, Result};
use crate::measures::grid::{GridDensity, Point};

const SHIFT_SNAP: f64 = 1e-9;

/// `μ_t = g(· − tV)` with the constant field `V`.
///
/// Shifts that are integer multiples of `h` on every axis are exact index
/// permutations; other shifts use separable linear interpolation, which is
/// `O(h)` accurate.
pub fn translate_curve(g: &GridDensity, velocity: Point, times: &[f64]) -> Result<Trajectory> {
    let spec = g.spec().clone();
    let v = if spec.dim() == 1 { [velocity[0], 0.0] } else { velocity };
    let densities = times
        .iter()
        .map(|&t| shift_density(g, [t * v[0] / spec.h(), t * v[1] / spec.h()]))
        .collect::<Result<Vec<_>>>()?;
    let field = VelocityField::sample(&spec, times, &ConstantField(v))?;
    Trajectory::new(times.to_vec(), densities, Some(field))
}

/// `g(· − s·h)` for a shift `s` measured in cells.
pub fn shift_density(g: &GridDensity, shift: [f64; 2]) -> Result<GridDensity> {
    let spec = g.spec();
    let (nx, ny) = (spec.nx() as isize, spec.ny() as isize);
    let vals = g.values();
    let src = |ix: isize, iy: isize| -> f64 {
        if ix < 0 || iy < 0 || ix >= nx || iy >= ny { 0.0 } else { vals[spec.index(ix as usize, iy as usize)] }
    };
    let snapped: Vec<Option<isize>> = shift
        .iter()
        .map(|&s| ((s - s.round()).abs() < SHIFT_SNAP).then(|| s.round() as isize))
        .collect();
    let mut out = vec![0.0; spec.len()];
    for iy in 0..ny {
        for ix in 0..nx {
            let value = match (snapped[0], snapped[1]) {
                (Some(kx), Some(ky)) => src(ix - kx, iy - ky),
                _ => {
                    let fx = ix as f64 - shift[0];
                    let fy = iy as f64 - shift[1];
                    let x0 = fx.floor();
                    let ax = fx - x0;
                    let y0 = fy.floor();
                    let ay = fy - y0;
                    let (x0, y0) = (x0 as isize, y0 as isize);
                    (1.0 - ax) * (1.0 - ay) * src(x0, y0)
                        + ax * (1.0 - ay) * src(x0 + 1, y0)
                        + (1.0 - ax) * ay * src(x0, y0 + 1)
                        + ax * ay * src(x0 + 1, y0 + 1)
                }
            };
            out[spec.index(ix as usize, iy as usize)] = value;
        }
    }
    let mass_out: f64 = out.iter().sum::<f64>() * spec.cell_volume();
    if (1.0 - mass_out).abs() > 1e-9 {
        return Err(PlqpError::SupportExitsGrid(format!("translated support leaves the grid (mass {mass_out})")));
    }
    if snapped.iter().all(|s| s.is_some()) {
        GridDensity::new(spec.clone(), out)
    } else {
        GridDensity::normalized(spec.clone(), out)
    }
}

/// Dilation about the origin: `μ_t = f(x/s)/sⁿ`, `s = 1 − t + tM`, with
/// field `v_t(x) = (M−1)/(1+t(M−1))·x`. `f` is evaluated by bilinear
/// interpolation of `g`.
pub fn dilate_curve(g: &GridDensity, factor: f64, times: &[f64]) -> Result<Trajectory> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(PlqpError::InvalidParameter(format!("dilation factor {factor} must be positive")));
    }
    let spec = g.spec().clone();
    let n = spec.dim() as i32;
    let densities = times
        .iter()
        .map(|&t| {
            let s = 1.0 - t + t * factor;
            if !(s > 0.0) {
                return Err(PlqpError::InvalidParameter(format!("scale {s} at t = {t}")));
            }
            let values = (0..spec.len())
                .map(|i| {
                    let x = spec.center(i);
                    g.interpolate([x[0] / s, x[1] / s]) / s.powi(n)
                })
                .collect();
            GridDensity::from_samples(spec.clone(), values).map_err(|e| match e {
                PlqpError::SupportExitsGrid(m) => PlqpError::SupportExitsGrid(format!("dilated support at t = {t}: {m}")),
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let field = VelocityField::sample(&spec, times, &DilationField { factor })?;
    Trajectory::new(times.to_vec(), densities, Some(field))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::ramp;
    use crate::measures::grid::GridSpec;

    fn ball() -> GridDensity {
        let spec = GridSpec::square(-2.0, 2.0, 40).unwrap();
        ramp(&spec, [0.0, 0.0], 0.8, 0.3).unwrap()
    }

    #[test]
    fn zero_velocity_is_constant() {
        let g = ball();
        let tr = translate_curve(&g, [0.0, 0.0], &[0.0, 0.5, 1.0]).unwrap();
        assert!(tr.densities().iter().all(|d| d == &g));
    }

    #[test]
    fn integer_shift_is_permutation_and_reversible() {
        let g = ball();
        let h = g.spec().h();
        let tr = translate_curve(&g, [2.0 * h, -h], &[0.0, 1.0, 2.0]).unwrap();
        let d2 = &tr.densities()[2];
        for iy in 3..37 {
            for ix in 0..36 {
                assert_eq!(d2.at(ix + 4, iy - 2), g.at(ix, iy));
            }
        }
        let mut sorted_a = g.values().to_vec();
        let mut sorted_b = d2.values().to_vec();
        sorted_a.sort_by(f64::total_cmp);
        sorted_b.sort_by(f64::total_cmp);
        assert_eq!(sorted_a, sorted_b);
        let back = translate_curve(d2, [-2.0 * h, h], &[2.0]).unwrap();
        assert_eq!(back.densities()[0].values(), g.values());
    }

    #[test]
    fn fractional_shift_conserves_mass() {
        let g = ball();
        let h = g.spec().h();
        let tr = translate_curve(&g, [0.37 * h, 0.61 * h], &[0.0, 0.5, 1.0, 1.7]).unwrap();
        for d in tr.densities() {
            assert!((d.mass() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn leaving_the_grid_errors() {
        let g = ball();
        assert!(translate_curve(&g, [1.5, 0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn unit_dilation_is_constant_with_zero_field() {
        let g = ball();
        let tr = dilate_curve(&g, 1.0, &[0.0, 0.5, 1.0]).unwrap();
        for d in tr.densities() {
            for (a, b) in d.values().iter().zip(g.values()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        let f = tr.field().unwrap();
        assert!((0..3).all(|k| f.at(k).iter().all(|v| v[0] == 0.0 && v[1] == 0.0)));
    }

    #[test]
    fn dilation_endpoint_and_field_bound() {
        let spec = GridSpec::square(-3.0, 3.0, 60).unwrap();
        let g = ramp(&spec, [0.0, 0.0], 0.8, 0.4).unwrap();
        let m = 1.5;
        let tr = dilate_curve(&g, m, &[0.0, 0.5, 1.0]).unwrap();
        let end = &tr.densities()[2];
        let expect: Vec<f64> = (0..spec.len())
            .map(|i| {
                let x = spec.center(i);
                g.interpolate([x[0] / m, x[1] / m]) / (m * m)
            })
            .collect();
        let mass: f64 = expect.iter().sum::<f64>() * spec.cell_volume();
        for (a, b) in end.values().iter().zip(&expect) {
            assert!((a - b / mass).abs() < 1e-12);
        }
        // (1+M)·spt μ ⊆ B_R with spt μ ⊆ B_0.8 (plus a cell)
        let r = (1.0 + m) * (0.8 + spec.h());
        let f = tr.field().unwrap();
        for (k, d) in tr.densities().iter().enumerate() {
            assert!(f.sup_on_support(k, d) <= r * (m - 1.0).abs());
        }
    }
}
