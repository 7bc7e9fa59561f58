use std::path::Path;

use plqp::bottleneck::{winf, winf_by, winf_permutation_oracle};
use plqp::dynamics::io::{read_trajectory, write_trajectory};
use plqp::dynamics::{bb_verify, continuity_residual, reconstruct_velocity, Trajectory, VelocityNorm};
use plqp::functionals::{isop, sobolev_ratio};
use plqp::measures::io::load_density;
use plqp::measures::{dilate_curve, dist, translate_curve, DiscreteMeasure, GridDensity, Point};
use plqp::mms::{run_scheme, Family, SchemeTemplate, StepPartition};
use plqp::plmetric::{exponent, lp_norm_diff, metric_derivative, transport_part, PLMetricParams};
use plqp::transport::{monotone_1d, wq, wq_capped, wq_permutation_oracle, MAX_ATOMS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{self, CurveConfig, CurveKind, MmsConfig};
use crate::output::OutDir;
use crate::{CliError, Command, FamilyArg};

const ORACLE_TOL: f64 = 1e-9;

/// Bottleneck atom cap from `PLQP_MAX_ATOMS`.
pub fn atom_cap() -> Result<usize, CliError> {
    match std::env::var("PLQP_MAX_ATOMS") {
        Err(_) => Ok(MAX_ATOMS),
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::input(format!("PLQP_MAX_ATOMS = {s:?} is not a positive integer"))),
    }
}

pub fn execute(cmd: &Command, cap: usize, out: Option<&mut OutDir>) -> Result<Value, CliError> {
    match cmd {
        Command::Dist { q, p, a, b } => cmd_dist(q, p, a, b, cap),
        Command::Isop { file, r } => cmd_isop(file, *r),
        Command::Mms { config, tau, steps, family, seed, grid } => {
            cmd_mms(config, *tau, *steps, *family, *seed, *grid, out)
        }
        Command::Bb { steps, a, b } => cmd_bb(*steps, a, b, cap),
        Command::Curve { config, steps, grid, q, p } => cmd_curve(config, *steps, *grid, q.as_deref(), p, cap, out),
        Command::Reconstruct { manifest, q } => cmd_reconstruct(manifest, q, out),
        Command::Oracle { seed, count } => cmd_oracle(*seed, *count),
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::input(e.to_string()))
}

fn parse_exponent(flag: &str, s: &str) -> Result<f64, CliError> {
    let v = exponent::parse(s).map_err(|e| CliError::input(format!("--{flag}: {e}")))?;
    if !(v >= 1.0) {
        return Err(CliError::input(format!("--{flag} = {s} must be >= 1")));
    }
    Ok(v)
}

fn exp_json(v: f64) -> Value {
    if v.is_infinite() { json!("inf") } else { json!(v) }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomFile {
    dim: usize,
    points: Vec<Point>,
    weights: Vec<f64>,
}

enum Input {
    Grid(GridDensity),
    Atoms(DiscreteMeasure),
}

fn load_input(path: &Path) -> Result<Input, CliError> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let a: AtomFile =
            serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let m = DiscreteMeasure::normalized(a.dim, a.points, a.weights)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        Ok(Input::Atoms(m))
    } else {
        Ok(Input::Grid(load_grid(path)?))
    }
}

fn load_grid(path: &Path) -> Result<GridDensity, CliError> {
    load_density(path).map_err(|e| CliError::input(with_path(path, e)))
}

fn with_path(path: &Path, e: plqp::PlqpError) -> String {
    let msg = e.to_string();
    let p = path.display().to_string();
    if msg.contains(&p) { msg } else { format!("{p}: {msg}") }
}

fn atom_transport(a: &DiscreteMeasure, b: &DiscreteMeasure, q: f64, cap: usize) -> plqp::Result<f64> {
    if q.is_infinite() {
        Ok(winf_by(a, b, cap, &dist)?.value)
    } else {
        Ok(wq_capped(a, b, q, cap)?.cost)
    }
}

fn cmd_dist(q: &str, p: &str, a: &Path, b: &Path, cap: usize) -> Result<Value, CliError> {
    let (q, p) = (parse_exponent("q", q)?, parse_exponent("p", p)?);
    let (ia, ib) = (load_input(a)?, load_input(b)?);
    match (ia, ib) {
        (Input::Grid(f), Input::Grid(g)) => {
            if f.spec() != g.spec() {
                return Err(CliError::input(format!("{} and {} use different grids", a.display(), b.display())));
            }
            let transport = transport_part(&f, &g, q, cap)?;
            let lebesgue = lp_norm_diff(&f, &g, p)?;
            Ok(json!({
                "q": exp_json(q),
                "p": exp_json(p),
                "transport": transport,
                "lebesgue": lebesgue,
                "total": transport + lebesgue,
                "quantization_bound": f.spec().quantization_bound(),
                "metric_params_valid": PLMetricParams::new(q, p).is_ok(),
                "atom_cap": cap,
            }))
        }
        (Input::Atoms(ma), Input::Atoms(mb)) => {
            let transport = atom_transport(&ma, &mb, q, cap)?;
            Ok(json!({
                "q": exp_json(q),
                "p": exp_json(p),
                "transport": transport,
                "lebesgue": null,
                "total": null,
                "quantization_bound": 0.0,
                "metric_params_valid": PLMetricParams::new(q, p).is_ok(),
                "atom_cap": cap,
            }))
        }
        _ => Err(CliError::input("cannot mix a grid file with an atom list")),
    }
}

fn cmd_isop(file: &Path, r: Option<f64>) -> Result<Value, CliError> {
    let g = load_grid(file)?;
    let value = isop(&g)?;
    let sobolev = r.map(|r| sobolev_ratio(&g, r)).transpose()?;
    Ok(json!({
        "isop": value,
        "sobolev": sobolev,
        "h": g.spec().h(),
        "quantization_bound": g.spec().quantization_bound(),
    }))
}

fn cmd_mms(
    path: &Path,
    tau: Option<f64>,
    steps: Option<usize>,
    family: Option<FamilyArg>,
    seed: Option<u64>,
    grid: Option<usize>,
    out: Option<&mut OutDir>,
) -> Result<Value, CliError> {
    let (cfg, base): (MmsConfig, _) = config::load(path)?;
    let anchor = cfg.anchor.build(&base, grid)?;
    let mut template = cfg.template.unwrap_or_else(|| SchemeTemplate::isop(Family::radial_default()));
    match family {
        Some(FamilyArg::Radial) if !matches!(template.family, Family::Radial { .. }) => {
            template.family = Family::radial_default()
        }
        Some(FamilyArg::Local) if !matches!(template.family, Family::GridLocalSearch { .. }) => {
            template.family = Family::local_default(0)
        }
        _ => {}
    }
    if let (Some(s), Family::GridLocalSearch { seed, .. }) = (seed, &mut template.family) {
        *seed = s;
    }
    let partition = StepPartition::uniform(tau.unwrap_or(cfg.tau), steps.unwrap_or(cfg.steps))?;
    let sol = run_scheme(&anchor, &partition, &template)?;
    if let Some(dir) = out {
        for (k, s) in sol.states.iter().enumerate() {
            let p = dir.root().join(format!("state_{k:04}.csv"));
            dir.track([p.clone()]);
            plqp::measures::io::save_density(&p, s)?;
        }
    }
    let ledger = sol.ledger();
    Ok(json!({ "template": to_value(&template)?, "ledger": to_value(&ledger)? }))
}

fn cmd_bb(steps: usize, a: &Path, b: &Path, cap: usize) -> Result<Value, CliError> {
    let (f, g) = (load_grid(a)?, load_grid(b)?);
    if f.spec() != g.spec() {
        return Err(CliError::input(format!("{} and {} use different grids", a.display(), b.display())));
    }
    let atoms = f.support().len().max(g.support().len());
    if atoms > cap {
        return Err(plqp::PlqpError::TooLarge { atoms, cap }.into());
    }
    to_value(&bb_verify(&f, &g, steps)?)
}

fn curve_times(horizon: f64, steps: usize) -> Result<Vec<f64>, CliError> {
    if steps < 2 || !(horizon > 0.0 && horizon.is_finite()) {
        return Err(CliError::input("curve needs steps >= 2 and a positive horizon"));
    }
    Ok((0..=steps).map(|k| horizon * k as f64 / steps as f64).collect())
}

fn write_traj(out: Option<&mut OutDir>, stem: &str, traj: &Trajectory) -> Result<(), CliError> {
    if let Some(dir) = out {
        let root = dir.root().to_path_buf();
        let files = write_trajectory(&root, stem, traj);
        // clean up whatever was written before a failure too
        if let Ok(entries) = std::fs::read_dir(&root) {
            let prefix = format!("{stem}_");
            dir.track(entries.filter_map(|e| e.ok()).map(|e| e.path()).filter(|p| {
                p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with(&prefix) || n == format!("{stem}.json"))
            }));
        }
        files?;
    }
    Ok(())
}

fn cmd_curve(
    path: &Path,
    steps: Option<usize>,
    grid: Option<usize>,
    q: Option<&str>,
    p: &str,
    cap: usize,
    out: Option<&mut OutDir>,
) -> Result<Value, CliError> {
    let (cfg, base): (CurveConfig, _) = config::load(path)?;
    let anchor = cfg.anchor.build(&base, grid)?;
    let times = curve_times(cfg.horizon, steps.unwrap_or(cfg.steps))?;
    let traj = match cfg.curve {
        CurveKind::Translate { velocity } => translate_curve(&anchor, velocity, &times)?,
        CurveKind::Dilate { factor } => dilate_curve(&anchor, factor, &times)?,
    };
    let residual = continuity_residual(&traj)?;
    let derivative = match q {
        None => None,
        Some(q) => {
            let params = PLMetricParams::new(parse_exponent("q", q)?, parse_exponent("p", p)?)?;
            let traj_cap = traj.densities().iter().map(|d| d.support().len()).max().unwrap_or(0);
            if params.q.is_infinite() && traj_cap > cap {
                return Err(plqp::PlqpError::TooLarge { atoms: traj_cap, cap }.into());
            }
            Some(metric_derivative(&traj, &params)?)
        }
    };
    write_traj(out, "trajectory", &traj)?;
    Ok(json!({
        "times": times,
        "residual": to_value(&residual)?,
        "metric_derivative": to_value(&derivative)?,
        "h": anchor.spec().h(),
        "quantization_bound": anchor.spec().quantization_bound(),
    }))
}

fn cmd_reconstruct(manifest: &Path, q: &str, out: Option<&mut OutDir>) -> Result<Value, CliError> {
    let traj = read_trajectory(manifest).map_err(|e| {
        if e.is_solver_failure() { CliError::from(e) } else { CliError::input(with_path(manifest, e)) }
    })?;
    let q = parse_exponent("q", q)?;
    let norm = if q.is_infinite() { VelocityNorm::Linf } else { VelocityNorm::Lq { q } };
    let rec = reconstruct_velocity(&traj, norm)?;
    let quantization_bound = traj.spec().quantization_bound();
    let with_field = traj.with_field(rec.field.clone())?;
    let residual = continuity_residual(&with_field)?;
    write_traj(out, "trajectory", &with_field)?;
    Ok(json!({
        "norm": to_value(&rec.norm)?,
        "per_step_norm": rec.per_step_norm,
        "field_sup": rec.field_sup,
        "residual": to_value(&residual)?,
        "quantization_bound": quantization_bound,
    }))
}

fn random_uniform(rng: &mut ChaCha8Rng, m: usize) -> plqp::Result<DiscreteMeasure> {
    let pts = (0..m).map(|_| [rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)]).collect();
    DiscreteMeasure::uniform(2, pts)
}

fn cmd_oracle(seed: u64, count: usize) -> Result<Value, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut e_inf, mut e_q, mut e_line) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..count {
        let m = rng.gen_range(1..=6);
        let (a, b) = (random_uniform(&mut rng, m)?, random_uniform(&mut rng, m)?);
        e_inf = e_inf.max((winf(&a, &b)?.value - winf_permutation_oracle(&a, &b)?).abs());
        e_q = e_q.max((wq(&a, &b, 2.0)?.cost - wq_permutation_oracle(&a, &b, 2.0)?).abs());
        let n = rng.gen_range(1..=8);
        let xs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..10.0)).collect();
        let ws: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
        let k = rng.gen_range(1..=8);
        let ys: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..10.0)).collect();
        let vs: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
        let (la, lb) = (DiscreteMeasure::line(&xs, &ws)?, DiscreteMeasure::line(&ys, &vs)?);
        e_line = e_line.max((wq(&la, &lb, 1.5)?.cost - monotone_1d(&la, &lb, 1.5)?).abs());
    }
    let passed = e_inf <= ORACLE_TOL && e_q <= ORACLE_TOL && e_line <= ORACLE_TOL;
    Ok(json!({
        "seed": seed,
        "instances": count,
        "winf_vs_permutation": e_inf,
        "w2_vs_permutation": e_q,
        "w1_5_vs_monotone": e_line,
        "tolerance": ORACLE_TOL,
        "passed": passed,
    }))
}
