use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::measures::{make_multiball, make_ramp_ball, GridSpec};

fn grid48() -> GridSpec {
    GridSpec::square(-3.0, 3.0, 48).unwrap()
}

fn two_ball() -> GridDensity {
    let spec = grid48();
    let w = 2.0 * spec.h();
    make_multiball(&spec, &[[-1.5, 0.0], [1.5, 0.0]], &[1.0, 1.0], &[0.75, 0.25], w).unwrap().density
}

fn ball() -> GridDensity {
    let spec = grid48();
    make_ramp_ball(&spec, [0.0, 0.0], 1.0, 2.0 * spec.h()).unwrap()
}

fn radial() -> SchemeTemplate {
    SchemeTemplate::isop(Family::radial_default())
}

#[test]
fn partitions() {
    let p = StepPartition::new(vec![0.1, 0.2, 0.05]).unwrap();
    assert!((p.horizon() - 0.35).abs() < 1e-15);
    assert_eq!(p.sup_step(), 0.2);
    assert_eq!(p.nodes().len(), 4);
    assert!(StepPartition::new(vec![0.1, 0.0]).is_err());
    assert!(StepPartition::new(vec![]).is_err());
    assert_eq!(StepPartition::uniform(0.1, 3).unwrap().steps(), &[0.1, 0.1, 0.1]);
}

#[test]
fn identity_candidate_reproduces_anchor() {
    let g = two_ball();
    let prob = ResolventProblem::new(&radial(), 0.1, g.clone()).unwrap();
    let mid = vec![vec![16, 16], vec![16, 16]];
    let (state, moreau) = radial_candidate(&prob, &mid).unwrap();
    assert_eq!(state, g);
    let phi = Phi::Isop.evaluate(g.spec(), g.values()).unwrap();
    assert!((moreau - phi).abs() <= 1e-12);
}

#[test]
fn resolvent_never_exceeds_anchor_value() {
    for g in [ball(), two_ball()] {
        let prob = ResolventProblem::new(&radial(), 0.1, g.clone()).unwrap();
        let out = resolvent(&prob).unwrap();
        let phi0 = Phi::Isop.evaluate(g.spec(), g.values()).unwrap();
        assert!(out.moreau <= phi0 + 1e-12);
        assert!(out.phi <= phi0 + 1e-12);
    }
}

#[test]
fn ball_anchor_barely_moves() {
    let g = ball();
    let h = g.spec().h();
    let sol = run_scheme(&g, &StepPartition::uniform(0.1, 10).unwrap(), &radial()).unwrap();
    for (k, m) in sol.movement.iter().enumerate() {
        assert!(*m <= 2.0 * h, "step {k}: movement {m}");
    }
}

#[test]
fn two_ball_anchor_descends() {
    // on coarse lattices any move costs at least h in W_∞, which outweighs the gain at τ = 0.1
    let spec = GridSpec::square(-3.0, 3.0, 128).unwrap();
    let g = make_multiball(&spec, &[[-1.5, 0.0], [1.5, 0.0]], &[1.0, 1.0], &[0.75, 0.25], 0.25).unwrap().density;
    let phi0 = Phi::Isop.evaluate(g.spec(), g.values()).unwrap();
    let out = resolvent(&ResolventProblem::new(&radial(), 0.1, g).unwrap()).unwrap();
    assert!(out.moreau < phi0 - 1e-4, "Φ = {} vs φ = {phi0}", out.moreau);
}

#[test]
fn tiny_step_stays_close() {
    let g = two_ball();
    let out = resolvent(&ResolventProblem::new(&radial(), 1e-4, g.clone()).unwrap()).unwrap();
    let d = exact_distance(&out.state, &g, &PLMetricParams::infinity(), 48 * 48).unwrap();
    assert!(d.total <= 0.05, "{}", d.total);
}

#[test]
fn off_grid_center_is_infeasible() {
    let spec = grid48();
    let g = make_ramp_ball(&spec, [0.03, 0.0], 1.0, 0.25).unwrap();
    let r = resolvent(&ResolventProblem::new(&radial(), 0.1, g).unwrap());
    assert!(matches!(r, Err(PlqpError::FamilyInfeasible(_))), "{r:?}");
}

#[test]
fn candidate_cap_is_enforced() {
    let mut t = radial();
    t.family = Family::Radial { rings: 2, ladder: 32, step: 0.02, crosscheck_every: 0, max_candidates: 1000 };
    let r = resolvent(&ResolventProblem::new(&t, 0.1, ball()).unwrap());
    assert!(matches!(r, Err(PlqpError::FamilyInfeasible(_))));
}

#[test]
fn ledger_invariants_and_determinism() {
    let g = two_ball();
    let part = StepPartition::uniform(0.1, 6).unwrap();
    let sol = run_scheme(&g, &part, &radial()).unwrap();
    let phi = &sol.phi_values;
    for k in 0..sol.movement.len() {
        assert!(phi[k + 1] <= phi[k] + 1e-12);
        assert!(sol.moreau_values[k] <= phi[k] + 1e-9);
    }
    let diss = sol.dissipation();
    assert!(diss.iter().all(|&d| d <= phi[0] + 1e-9));
    let ledger = sol.ledger();
    assert_eq!(ledger.steps.len(), 6);
    assert!(ledger.steps[0].diagnostics.crosscheck.is_some());
    assert!(ledger.steps[1].diagnostics.crosscheck.is_none());
    let again = run_scheme(&g, &part, &radial()).unwrap();
    assert_eq!(serde_json::to_string(&sol.ledger()).unwrap(), serde_json::to_string(&again.ledger()).unwrap());
}

#[test]
fn replayed_candidates_are_not_better() {
    let g = two_ball();
    let prob = ResolventProblem::new(&radial(), 0.1, g).unwrap();
    let out = resolvent(&prob).unwrap();
    let (_, best) = radial_candidate(&prob, &out.diagnostics.best_parameters).unwrap();
    assert!((best - out.moreau).abs() <= 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let lv: Vec<Vec<usize>> = (0..2).map(|_| (0..2).map(|_| rng.gen_range(0..32)).collect()).collect();
        let (_, v) = radial_candidate(&prob, &lv).unwrap();
        assert!(v >= out.moreau - 1e-12);
    }
}

#[test]
fn crosscheck_bounds_family_metric() {
    let g = two_ball();
    let prob = ResolventProblem::new(&radial(), 0.1, g).unwrap();
    let out = resolvent(&prob).unwrap();
    let cc = out.diagnostics.crosscheck.unwrap();
    // the radial value is a lower bound on the exact bottleneck up to quantization
    let q = cc.block_factor as f64 * prob.anchor.spec().quantization_bound();
    assert!(out.distance.transport <= cc.transport + 2.0 * q + 1e-12);
}

#[test]
fn refinement_needs_two_partitions() {
    let r = refine_and_compare(&ball(), &[StepPartition::uniform(0.1, 2).unwrap()], &radial());
    assert!(matches!(r, Err(PlqpError::NeedTwoPartitions)));
}

#[test]
fn refinement_of_ball_stays_close() {
    let g = ball();
    let h = g.spec().h();
    let parts = [StepPartition::uniform(0.2, 2).unwrap(), StepPartition::uniform(0.1, 4).unwrap()];
    let rep = refine_and_compare(&g, &parts, &radial()).unwrap();
    assert!(rep.envelopes_monotone.iter().all(|&m| m));
    assert!(rep.pairs[0].max_metric_distance <= 2.0 * h, "{}", rep.pairs[0].max_metric_distance);
}

#[test]
fn refinement_rejects_mismatched_anchors() {
    let part = StepPartition::uniform(0.1, 1).unwrap();
    let a = run_scheme(&ball(), &part, &radial()).unwrap();
    let b = run_scheme(&two_ball(), &StepPartition::uniform(0.05, 2).unwrap(), &radial()).unwrap();
    assert!(matches!(compare_solutions(&[a, b]), Err(PlqpError::MismatchedAnchors(_))));
}

fn lumpy() -> GridDensity {
    let spec = GridSpec::square(0.0, 1.0, 10).unwrap();
    let vals = (0..spec.len())
        .map(|i| {
            let (ix, iy) = spec.coords(i);
            if spec.is_ring(ix, iy) || !(2..7).contains(&ix) || !(3..8).contains(&iy) {
                0.0
            } else {
                1.0 + ((ix * 7 + iy * 3) % 5) as f64
            }
        })
        .collect();
    GridDensity::normalized(spec, vals).unwrap()
}

#[test]
fn local_search_descends_deterministically() {
    let g = lumpy();
    let t = SchemeTemplate::isop(Family::GridLocalSearch { budget: 150, quantum: 5e-3, seed: 3 });
    let out = resolvent(&ResolventProblem::new(&t, 0.5, g.clone()).unwrap()).unwrap();
    let phi0 = Phi::Isop.evaluate(g.spec(), g.values()).unwrap();
    assert!(out.moreau <= phi0);
    assert!(out.diagnostics.candidates_evaluated <= 150);
    let again = resolvent(&ResolventProblem::new(&t, 0.5, g).unwrap()).unwrap();
    assert_eq!(out.state, again.state);
    assert_eq!(out.diagnostics.best_parameters, again.diagnostics.best_parameters);
}

#[test]
fn sobolev_functional_runs_in_radial_family() {
    let mut t = radial();
    t.phi = Phi::Sobolev { r: 1.5 };
    let g = two_ball();
    let phi0 = t.phi.evaluate(g.spec(), g.values()).unwrap();
    let out = resolvent(&ResolventProblem::new(&t, 0.1, g).unwrap()).unwrap();
    assert!(out.moreau <= phi0 + 1e-12);
}

#[test]
fn template_roundtrips_through_json() {
    let t = SchemeTemplate::isop(Family::local_default(11));
    let s = serde_json::to_string(&t).unwrap();
    assert_eq!(serde_json::from_str::<SchemeTemplate>(&s).unwrap(), t);
    let parsed: SchemeTemplate =
        serde_json::from_str(r#"{"phi":{"kind":"isop"},"family":{"kind":"radial","rings":2,"ladder":8,"step":0.05,"crosscheck_every":0,"max_candidates":100000}}"#)
            .unwrap();
    assert_eq!(parsed.metric, PLMetricParams::infinity());
}

