//! Acceptance run: one line per criterion, non-zero exit if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use plqp::bottleneck::{winf, winf_grid, winf_permutation_oracle};
use plqp::dynamics::{
    action_minimize, bb_verify, continuity_residual, half_turn_and_shift_ensemble, reconstruct_velocity,
    trace_characteristics, Trajectory, VelocityNorm,
};
use plqp::functionals::{isop, isop_multiball_formula};
use plqp::measures::{
    dilate_curve, grid_to_atoms, indicator_box, make_cone, make_multiball, make_ramp_ball, ramp_ball_l2, ramp_ball_tv,
    shift_density, translate_curve, DiscreteMeasure, GridDensity, GridSpec,
};
use plqp::mms::{run_scheme, Family, SchemeTemplate, StepPartition};
use plqp::plmetric::{dqp, metric_derivative, PLMetricParams};
use plqp::transport::{monotone_1d, wq, wq_permutation_oracle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = plqp::Result<(bool, String)>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform_cloud(r: &mut ChaCha8Rng, m: usize) -> plqp::Result<DiscreteMeasure> {
    DiscreteMeasure::uniform(2, (0..m).map(|_| [r.gen_range(0.0..10.0), r.gen_range(0.0..10.0)]).collect())
}

fn bottleneck_exactness() -> Outcome {
    let mut r = rng(1);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let m = r.gen_range(1..=6);
        let (a, b) = (uniform_cloud(&mut r, m)?, uniform_cloud(&mut r, m)?);
        worst = worst.max((winf(&a, &b)?.value - winf_permutation_oracle(&a, &b)?).abs());
    }
    Ok((worst <= 1e-9, format!("200 instances, max |winf - oracle| = {worst:.2e}")))
}

fn finite_q_exactness() -> Outcome {
    let mut r = rng(2);
    let mut line = 0.0f64;
    for _ in 0..100 {
        let q = [1.0, 1.5, 2.0, 3.0][r.gen_range(0..4)];
        let (n, k) = (r.gen_range(1..=8), r.gen_range(1..=8));
        let xs: Vec<f64> = (0..n).map(|_| r.gen_range(0.0..10.0)).collect();
        let ws: Vec<f64> = (0..n).map(|_| r.gen_range(0.1..1.0)).collect();
        let ys: Vec<f64> = (0..k).map(|_| r.gen_range(0.0..10.0)).collect();
        let vs: Vec<f64> = (0..k).map(|_| r.gen_range(0.1..1.0)).collect();
        let (a, b) = (DiscreteMeasure::line(&xs, &ws)?, DiscreteMeasure::line(&ys, &vs)?);
        line = line.max((wq(&a, &b, q)?.cost - monotone_1d(&a, &b, q)?).abs());
    }
    let mut perm = 0.0f64;
    for _ in 0..200 {
        let q = [1.0, 2.0, 3.0][r.gen_range(0..3)];
        let m = r.gen_range(1..=6);
        let (a, b) = (uniform_cloud(&mut r, m)?, uniform_cloud(&mut r, m)?);
        perm = perm.max((wq(&a, &b, q)?.cost - wq_permutation_oracle(&a, &b, q)?).abs());
    }
    Ok((
        line <= 1e-9 && perm <= 1e-9,
        format!("1D: max error {line:.2e} over 100; permutation: max error {perm:.2e} over 200"),
    ))
}

fn random_density(r: &mut ChaCha8Rng, spec: &GridSpec) -> plqp::Result<GridDensity> {
    let vals = (0..spec.len())
        .map(|i| {
            let (ix, iy) = spec.coords(i);
            if spec.is_ring(ix, iy) || r.gen_bool(0.3) { 0.0 } else { r.gen_range(0.0..1.0) }
        })
        .collect();
    GridDensity::normalized(spec.clone(), vals)
}

fn metric_axioms() -> Outcome {
    let spec = GridSpec::square(0.0, 1.0, 7)?;
    let mut r = rng(3);
    let params = [PLMetricParams::new(2.0, 2.0)?, PLMetricParams::infinity(), PLMetricParams::new(f64::INFINITY, 1.0)?];
    let (mut asym, mut excess) = (0.0f64, f64::NEG_INFINITY);
    for _ in 0..100 {
        let (f, g, k) = (random_density(&mut r, &spec)?, random_density(&mut r, &spec)?, random_density(&mut r, &spec)?);
        for p in &params {
            let (fg, gf) = (dqp(&f, &g, p)?.total, dqp(&g, &f, p)?.total);
            asym = asym.max((fg - gf).abs());
            let (fk, kg) = (dqp(&f, &k, p)?.total, dqp(&k, &g, p)?.total);
            excess = excess.max(fg - fk - kg);
        }
    }
    Ok((
        asym == 0.0 && excess <= 1e-9,
        format!("100 triples x 3 exponent pairs: max asymmetry {asym:.1e}, max triangle excess {excess:.2e}"),
    ))
}

fn isoperimetric_closed_forms() -> Outcome {
    let spec = GridSpec::square(-1.5, 1.5, 256)?;
    let ball = make_ramp_ball(&spec, [0.0, 0.0], 1.0, 0.1)?;
    let got = isop(&ball)?.value;
    let oracle = ramp_ball_tv(1.0, 0.1) / ramp_ball_l2(1.0, 0.1);
    let err_a = (got / oracle - 1.0).abs();

    let spec = GridSpec::square(-3.0, 3.0, 256)?;
    let w = 2.0 * spec.h();
    let configs: [(&[[f64; 2]], &[f64], &[f64]); 3] = [
        (&[[-1.5, 0.0], [1.5, 0.0]], &[1.0, 1.0], &[0.75, 0.25]),
        (&[[-1.4, -1.0], [1.4, -1.0], [0.0, 1.5]], &[0.8, 0.6, 0.7], &[0.5, 0.2, 0.3]),
        (&[[-1.2, 0.0], [1.6, 0.5]], &[1.2, 0.6], &[0.5, 0.5]),
    ];
    let mut err_b = 0.0f64;
    for (centers, radii, weights) in configs {
        let m = make_multiball(&spec, centers, radii, weights, w)?;
        let grid = isop(&m.density)?.value;
        let closed = isop_multiball_formula(radii, weights)?;
        err_b = err_b.max((grid / closed - 1.0).abs());
    }

    let mut err_c = 0.0f64;
    for n in 1..=5usize {
        let c = vec![1.0 / n as f64; n];
        let r: Vec<f64> = (0..n).map(|_| 0.5).collect();
        let bound = 2.0 * PI.sqrt() * (n as f64).sqrt();
        err_c = err_c.max((isop_multiball_formula(&r, &c)? - bound).abs());
    }
    Ok((
        err_a <= 0.03 && err_b <= 0.05 && err_c <= 1e-9,
        format!("ball {got:.4} vs {oracle:.4} ({:.2}%); multiball max {:.2}%; equal-ratio max {err_c:.1e}", 100.0 * err_a, 100.0 * err_b),
    ))
}

fn scheme_invariants() -> Outcome {
    let spec = GridSpec::square(-3.0, 3.0, 48)?;
    let h = spec.h();
    let template = SchemeTemplate::isop(Family::radial_default());
    let two = make_multiball(&spec, &[[-1.5, 0.0], [1.5, 0.0]], &[1.0, 1.0], &[0.75, 0.25], 2.0 * h)?.density;
    let sol = run_scheme(&two, &StepPartition::uniform(0.1, 20)?, &template)?;
    let phi = &sol.phi_values;
    let monotone = phi.windows(2).all(|w| w[1] <= w[0]);
    let ledger_gap = sol.dissipation().iter().map(|d| d - phi[0]).fold(f64::NEG_INFINITY, f64::max);
    let ball = make_ramp_ball(&spec, [0.0, 0.0], 1.0, 2.0 * h)?;
    let bsol = run_scheme(&ball, &StepPartition::uniform(0.1, 20)?, &template)?;
    let moved = bsol.movement.iter().copied().fold(0.0, f64::max);
    Ok((
        monotone && ledger_gap <= 1e-9 && moved <= 2.0 * h,
        format!(
            "two-ball: phi {:.6} -> {:.6}, nonincreasing {monotone}, ledger excess {ledger_gap:.1e}; ball max movement {moved:.4} (2h = {:.4})",
            phi[0],
            phi[phi.len() - 1],
            2.0 * h
        ),
    ))
}

fn one_step_benamou_brenier() -> Outcome {
    let spec = GridSpec::square(0.0, 1.0, 10)?;
    let mut r = rng(6);
    let mut worst = f64::INFINITY;
    for _ in 0..50 {
        let (a, b) = (random_density(&mut r, &spec)?, random_density(&mut r, &spec)?);
        let dt = r.gen_range(0.05..1.0);
        let w = winf(&grid_to_atoms(&a)?, &grid_to_atoms(&b)?)?.value;
        let traj = Trajectory::new(vec![0.0, dt], vec![a, b], None)?;
        let rec = reconstruct_velocity(&traj, VelocityNorm::Linf)?;
        worst = worst.min(rec.per_step_norm[0] - w / dt);
    }
    let spec = GridSpec::square(-1.5, 1.5, 48)?;
    let h = spec.h();
    let g0 = make_ramp_ball(&spec, [-0.3, 0.0], 0.6, 0.25)?;
    let mut gap = 0.0f64;
    // one lattice cell per step along each moving axis
    for (shift, steps) in [([8.0, 0.0], 8), ([0.0, 6.0], 6), ([5.0, 5.0], 5)] {
        let g1 = shift_density(&g0, shift)?;
        let rep = bb_verify(&g0, &g1, steps)?;
        gap = gap.max((rep.action - rep.winf).abs());
    }
    Ok((
        worst >= -1e-6 && gap <= 2.0 * h,
        format!("50 random pairs: min (norm - winf/dt) = {worst:.3e}; translation pairs max |action - winf| = {gap:.4} (2h = {:.4})", 2.0 * h),
    ))
}

fn rotation_instance() -> Outcome {
    let spec = GridSpec::new(2, &[64, 32], 0.1, &[-0.65, -1.55])?;
    let h = spec.h();
    let mu = indicator_box(&spec, [-0.5, -1.0], [1.5, 1.0])?;
    let left = indicator_box(&spec, [-0.5, -1.0], [0.5, 1.0])?;
    let right = indicator_box(&spec, [4.5, -1.0], [5.5, 1.0])?;
    let nu = GridDensity::normalized(spec.clone(), left.values().iter().zip(right.values()).map(|(a, b)| a + b).collect())?;
    let w = winf_grid(&mu, &nu, 5000)?.value;
    let (ma, mb) = (grid_to_atoms(&mu)?, grid_to_atoms(&nu)?);
    let (_, straight) = action_minimize(&ma, &mb)?;
    let mixed = half_turn_and_shift_ensemble(&ma, 0.5, 4.0, 64)?;
    let end = mixed.marginal(mixed.segments())?;
    let lands = winf(&end, &mb)?.value;
    let mixed_action = mixed.sup_action();
    Ok((
        (w - 4.0).abs() <= 3.0 * h && (straight - 4.0).abs() <= 1e-9 && (mixed_action - 4.0).abs() <= 1e-9 && lands <= 1e-9,
        format!("winf {w:.6}; straight ensemble {straight:.12}; mixed ensemble {mixed_action:.12} (end marginal off by {lands:.1e})"),
    ))
}

fn residual_at(kind: &str, n: usize) -> plqp::Result<f64> {
    let spec = GridSpec::square(-3.0, 3.0, n)?;
    let h = spec.h();
    let dt = 2.0 * h;
    let steps = (0.5 / dt).round() as usize;
    let times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
    let traj = match kind {
        "translate" => translate_curve(&make_ramp_ball(&spec, [-0.5, 0.0], 1.2, 0.8)?, [0.7, 0.3], &times)?,
        _ => dilate_curve(&make_ramp_ball(&spec, [0.0, 0.0], 1.2, 0.8)?, 1.5, &times)?,
    };
    Ok(continuity_residual(&traj)?.max_defect)
}

fn continuity_order() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for kind in ["translate", "dilate"] {
        let e: Vec<f64> = [64, 128, 256].iter().map(|&n| residual_at(kind, n)).collect::<plqp::Result<_>>()?;
        let (r1, r2) = (e[0] / e[1], e[1] / e[2]);
        ok &= (1.5..=3.0).contains(&r1) && (1.5..=3.0).contains(&r2);
        detail.push(format!("{kind}: defects {:.2e} {:.2e} {:.2e}, ratios {r1:.2} {r2:.2}", e[0], e[1], e[2]));
    }
    Ok((ok, detail.join("; ")))
}

fn ac_discrimination() -> Outcome {
    let spec = GridSpec::interval(-2.0, 4.0, 1200)?;
    let h = spec.h();
    let dt = 2.0 * h;
    let v = 1.0;
    let times: Vec<f64> = (0..=10).map(|k| k as f64 * dt).collect();
    let params = PLMetricParams::infinity();
    let (cone, lip) = make_cone(&spec, [0.0, 0.0], 1.0)?;
    let bound = (lip + 1.0) * v;
    let est = metric_derivative(&translate_curve(&cone, [v, 0.0], &times)?, &params)?;
    let n = est.quotient.len();
    let bump_max = est.quotient[1..n - 1].iter().copied().fold(0.0, f64::max);
    let ind = indicator_box(&spec, [0.0, 0.0], [1.0, 0.0])?;
    let est = metric_derivative(&translate_curve(&ind, [v, 0.0], &times)?, &params)?;
    let ind_min = est.lebesgue[1..n - 1].iter().copied().fold(f64::INFINITY, f64::min);
    Ok((
        bump_max <= 1.1 * bound && ind_min > 10.0 * bound,
        format!("bump max quotient {bump_max:.4} vs 1.1(Lip+1)|V| = {:.4}; indicator min L^inf quotient {ind_min:.2} vs 10x bound {:.2}", 1.1 * bound, 10.0 * bound),
    ))
}

fn superposition() -> Outcome {
    let spec = GridSpec::square(-3.0, 3.0, 128)?;
    let g = make_ramp_ball(&spec, [0.0, 0.0], 1.2, 0.8)?;
    let times: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    let mut worst = 0.0f64;
    for m in [0.5, 2.0] {
        let rep = trace_characteristics(&dilate_curve(&g, m, &times)?, 10_000)?;
        for (a, b) in rep.initial.iter().zip(&rep.terminal) {
            let r0 = a[0].hypot(a[1]);
            worst = worst.max((b[0].hypot(b[1]) / (m * r0) - 1.0).abs());
        }
    }
    Ok((worst <= 0.05, format!("N = 10^4, M in {{0.5, 2}}: max relative radius error {:.3}%", 100.0 * worst)))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "bottleneck exactness", budget: Duration::from_secs(10), run: bottleneck_exactness },
        Criterion { id: 2, name: "finite-q exactness", budget: Duration::from_secs(30), run: finite_q_exactness },
        Criterion { id: 3, name: "metric axioms", budget: Duration::from_secs(60), run: metric_axioms },
        Criterion { id: 4, name: "isoperimetric closed forms", budget: Duration::from_secs(60), run: isoperimetric_closed_forms },
        Criterion { id: 5, name: "scheme invariants", budget: Duration::from_secs(300), run: scheme_invariants },
        Criterion { id: 6, name: "dynamic bound at one step", budget: Duration::from_secs(120), run: one_step_benamou_brenier },
        Criterion { id: 7, name: "rotation instance", budget: Duration::from_secs(120), run: rotation_instance },
        Criterion { id: 8, name: "continuity-equation order", budget: Duration::from_secs(120), run: continuity_order },
        Criterion { id: 9, name: "AC vs non-AC discrimination", budget: Duration::from_secs(60), run: ac_discrimination },
        Criterion { id: 10, name: "superposition surrogate", budget: Duration::from_secs(60), run: superposition },
    ];
    let filter: Option<u32> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for c in criteria.iter().filter(|c| filter.is_none_or(|f| f == c.id)) {
        let start = Instant::now();
        let result = (c.run)();
        let took = start.elapsed();
        let (pass, detail) = match result {
            Ok((ok, d)) => (ok && took <= c.budget, d),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<28} {}  {detail} [{:.2}s of {}s]",
            c.id,
            c.name,
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            c.budget.as_secs()
        );
    }
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
