//! Exact `W_q` for finite `q ≥ 1` between discrete measures.
//!
//! Weights are scaled to integers (`1e12` units per unit mass) and the
//! transport problem is solved as a min-cost flow on the complete bipartite
//! graph. Returned costs are exact up to the `1e-12` relative weight
//! quantization. Beyond [`MAX_ATOMS`] atoms per side the solver refuses to
//! run instead of approximating.

use serde::{Deserialize, Serialize};

use crate::error::{PlqpError, Result};
use crate::graph::transport_ssp;
use crate::measures::{dist, DiscreteMeasure};

/// Integer units per unit of mass.
pub const SCALE: f64 = 1e12;
/// Default per-side atom cap for dense solvers.
pub const MAX_ATOMS: usize = 5000;

/// Sparse transport plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    /// `(source index, target index, mass)`.
    pub entries: Vec<(usize, usize, f64)>,
}

impl Coupling {
    pub fn identity(m: &DiscreteMeasure) -> Self {
        Self { entries: m.weights().iter().enumerate().map(|(i, &w)| (i, i, w)).collect() }
    }

    /// Largest marginal violation against the given weights.
    pub fn marginal_error(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
        let mut rows = vec![0.0; mu.len()];
        let mut cols = vec![0.0; nu.len()];
        for &(i, j, f) in &self.entries {
            rows[i] += f;
            cols[j] += f;
        }
        let r = rows.iter().zip(mu.weights()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let c = cols.iter().zip(nu.weights()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        r.max(c)
    }

    /// `(Σ flow·d^q)^{1/q}`.
    pub fn cost(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure, q: f64) -> f64 {
        let s: f64 = self
            .entries
            .iter()
            .map(|&(i, j, f)| f * dist(mu.points()[i], nu.points()[j]).powf(q))
            .sum();
        s.powf(1.0 / q)
    }

    /// Largest distance carried by a positive entry.
    pub fn max_distance(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.2 > 0.0)
            .map(|&(i, j, _)| dist(mu.points()[i], nu.points()[j]))
            .fold(0.0, f64::max)
    }

    /// Swaps the roles of source and target.
    pub fn transpose(&self) -> Self {
        let mut entries: Vec<_> = self.entries.iter().map(|&(i, j, f)| (j, i, f)).collect();
        entries.sort_by_key(|e| (e.0, e.1));
        Self { entries }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportResult {
    pub cost: f64,
    pub q: f64,
    pub plan: Coupling,
    pub solver: String,
}

/// Integer masses summing to exactly `SCALE`; the rounding excess goes to the
/// largest weight.
pub(crate) fn integer_weights(w: &[f64]) -> Vec<i64> {
    let mut out: Vec<i64> = w.iter().map(|&x| (x * SCALE).round() as i64).collect();
    let total: i64 = out.iter().sum();
    let target = SCALE as i64;
    if total != target {
        let big = (0..w.len()).max_by(|&a, &b| w[a].total_cmp(&w[b]).then(b.cmp(&a))).unwrap();
        out[big] += target - total;
    }
    out
}

fn check_q(q: f64) -> Result<()> {
    if q == f64::INFINITY {
        return Err(PlqpError::UseBottleneck);
    }
    if !(q >= 1.0) || q.is_nan() {
        return Err(PlqpError::InvalidParameter(format!("q = {q} must be >= 1")));
    }
    Ok(())
}

fn check_dims(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<()> {
    if mu.dim() != nu.dim() {
        return Err(PlqpError::DimensionMismatch(format!("{} vs {}", mu.dim(), nu.dim())));
    }
    Ok(())
}

pub(crate) fn check_cap(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cap: usize) -> Result<()> {
    let atoms = mu.len().max(nu.len());
    if atoms > cap {
        return Err(PlqpError::TooLarge { atoms, cap });
    }
    Ok(())
}

/// Min-cost plan for an arbitrary cost on allowed pairs (`None` forbids the
/// pair). Errors with `Infeasible` if the allowed pairs cannot carry the
/// marginals.
pub(crate) fn min_cost_plan(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: impl Fn(usize, usize) -> Option<f64>,
) -> Result<Coupling> {
    let (m, k) = (mu.len(), nu.len());
    let mut c = Vec::with_capacity(m * k);
    for i in 0..m {
        for j in 0..k {
            c.push(cost(i, j).unwrap_or(f64::INFINITY));
        }
    }
    let plan = transport_ssp(&integer_weights(mu.weights()), &integer_weights(nu.weights()), &c)
        .ok_or_else(|| PlqpError::Infeasible("allowed pairs cannot carry the marginals".into()))?;
    Ok(Coupling { entries: plan.into_iter().map(|(i, j, f)| (i, j, f as f64 / SCALE)).collect() })
}

/// Exact `W_q` with the default atom cap.
pub fn wq(mu: &DiscreteMeasure, nu: &DiscreteMeasure, q: f64) -> Result<TransportResult> {
    wq_capped(mu, nu, q, MAX_ATOMS)
}

pub fn wq_capped(mu: &DiscreteMeasure, nu: &DiscreteMeasure, q: f64, cap: usize) -> Result<TransportResult> {
    check_q(q)?;
    check_dims(mu, nu)?;
    check_cap(mu, nu, cap)?;
    let plan = min_cost_plan(mu, nu, |i, j| Some(dist(mu.points()[i], nu.points()[j]).powf(q)))?;
    let cost = plan.cost(mu, nu, q);
    Ok(TransportResult { cost, q, plan, solver: "ssp-min-cost-flow".into() })
}

pub(crate) fn uniform_pair(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<usize> {
    let m = mu.len();
    if nu.len() != m {
        return Err(PlqpError::NonUniformWeights(format!("{} vs {} atoms", m, nu.len())));
    }
    if m > 8 {
        return Err(PlqpError::InvalidParameter(format!("{m} atoms exceed the oracle limit of 8")));
    }
    let u = 1.0 / m as f64;
    if mu.weights().iter().chain(nu.weights()).any(|&w| (w - u).abs() > 1e-12) {
        return Err(PlqpError::NonUniformWeights("weights are not 1/m".into()));
    }
    Ok(m)
}

/// Calls `f` on every permutation of `0..m` (Heap's algorithm).
pub(crate) fn for_each_permutation(m: usize, mut f: impl FnMut(&[usize])) {
    let mut p: Vec<usize> = (0..m).collect();
    let mut c = vec![0usize; m];
    f(&p);
    let mut i = 0;
    while i < m {
        if c[i] < i {
            if i % 2 == 0 {
                p.swap(0, i);
            } else {
                p.swap(c[i], i);
            }
            f(&p);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Brute force over all `m!` assignments for uniform measures (`m ≤ 8`).
pub fn wq_permutation_oracle(mu: &DiscreteMeasure, nu: &DiscreteMeasure, q: f64) -> Result<f64> {
    check_q(q)?;
    check_dims(mu, nu)?;
    let m = uniform_pair(mu, nu)?;
    let d: Vec<Vec<f64>> = mu
        .points()
        .iter()
        .map(|&x| nu.points().iter().map(|&y| dist(x, y).powf(q)).collect())
        .collect();
    let mut best = f64::INFINITY;
    for_each_permutation(m, |p| {
        let s: f64 = p.iter().enumerate().map(|(i, &j)| d[i][j]).sum();
        best = best.min(s);
    });
    Ok((best / m as f64).powf(1.0 / q))
}

/// Quantile coupling on the line. `q = ∞` returns the bottleneck value.
pub fn monotone_1d(mu: &DiscreteMeasure, nu: &DiscreteMeasure, q: f64) -> Result<f64> {
    if mu.dim() != 1 || nu.dim() != 1 {
        return Err(PlqpError::DimensionMismatch("monotone coupling needs n = 1".into()));
    }
    if !(q >= 1.0) {
        return Err(PlqpError::InvalidParameter(format!("q = {q} must be >= 1")));
    }
    let sorted = |m: &DiscreteMeasure| {
        let mut v: Vec<(f64, f64)> = m.points().iter().map(|p| p[0]).zip(m.weights().iter().copied()).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v
    };
    let (a, b) = (sorted(mu), sorted(nu));
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (a[0].1, b[0].1);
    let mut acc = 0.0f64;
    loop {
        let f = ra.min(rb);
        let d = (a[i].0 - b[j].0).abs();
        if f > 1e-15 {
            if q.is_infinite() {
                acc = acc.max(d);
            } else {
                acc += f * d.powf(q);
            }
        }
        ra -= f;
        rb -= f;
        if ra <= 1e-15 {
            i += 1;
            if i == a.len() {
                break;
            }
            ra += a[i].1;
        }
        if rb <= 1e-15 {
            j += 1;
            if j == b.len() {
                break;
            }
            rb += b[j].1;
        }
    }
    Ok(if q.is_infinite() { acc } else { acc.powf(1.0 / q) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(xs: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::line(xs, &vec![1.0; xs.len()]).unwrap()
    }

    #[test]
    fn dirac_pair() {
        let r = wq(&line(&[0.0]), &line(&[3.0]), 2.0).unwrap();
        assert!((r.cost - 3.0).abs() < 1e-12);
    }

    #[test]
    fn two_point_instance() {
        let (a, b) = (line(&[0.0, 1.0]), line(&[0.0, 2.0]));
        assert!((wq(&a, &b, 1.0).unwrap().cost - 0.5).abs() < 1e-12);
        assert!((wq_permutation_oracle(&a, &b, 1.0).unwrap() - 0.5).abs() < 1e-12);
        assert!((monotone_1d(&a, &b, 1.0).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn two_point_polytope_grid_search() {
        // couplings of two uniform 2-point measures: γ(0→0) = s ∈ [0, ½]
        let (a, b) = (line(&[0.0, 1.0]), line(&[0.0, 2.0]));
        let best = (0..=1000)
            .map(|k| {
                let s = 0.5 * k as f64 / 1000.0;
                s * 0.0 + (0.5 - s) * 2.0 + (0.5 - s) * 1.0 + s * 1.0
            })
            .fold(f64::INFINITY, f64::min);
        assert!((wq(&a, &b, 1.0).unwrap().cost - best).abs() < 1e-12);
    }

    #[test]
    fn self_distance_is_zero() {
        let a = DiscreteMeasure::line(&[0.0, 1.0, 5.0], &[0.2, 0.3, 0.5]).unwrap();
        let r = wq(&a, &a, 2.0).unwrap();
        assert!(r.cost.abs() < 1e-12);
        assert_eq!(r.plan, Coupling::identity(&a));
    }

    #[test]
    fn bad_exponents() {
        let a = line(&[0.0]);
        assert!(matches!(wq(&a, &a, 0.5), Err(PlqpError::InvalidParameter(_))));
        let e = wq(&a, &a, f64::INFINITY).unwrap_err();
        assert!(e.to_string().contains("use bottleneck module"));
    }

    #[test]
    fn cap_is_enforced() {
        let a = line(&[0.0, 1.0, 2.0]);
        assert!(matches!(wq_capped(&a, &a, 1.0, 2), Err(PlqpError::TooLarge { .. })));
    }

    #[test]
    fn oracle_rejects_non_uniform() {
        let a = DiscreteMeasure::line(&[0.0, 1.0], &[0.25, 0.75]).unwrap();
        assert!(wq_permutation_oracle(&a, &a, 1.0).is_err());
    }

    #[test]
    fn permutations_enumerated() {
        let mut n = 0;
        for_each_permutation(5, |_| n += 1);
        assert_eq!(n, 120);
    }

    #[test]
    fn monotone_translation() {
        let a = DiscreteMeasure::line(&[0.0, 0.3, 1.7], &[0.2, 0.5, 0.3]).unwrap();
        let b = DiscreteMeasure::line(&[0.8, 1.1, 2.5], &[0.2, 0.5, 0.3]).unwrap();
        for q in [1.0, 2.0, 3.5] {
            assert!((monotone_1d(&a, &b, q).unwrap() - 0.8).abs() < 1e-12);
        }
    }

    #[test]
    fn random_instances_match_oracles() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..40 {
            let m = rng.gen_range(1..6);
            let k = rng.gen_range(1..6);
            let xs: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..10.0)).collect();
            let ys: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..10.0)).collect();
            let wx: Vec<f64> = (0..m).map(|_| rng.gen_range(0.1..1.0)).collect();
            let wy: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
            let a = DiscreteMeasure::line(&xs, &wx).unwrap();
            let b = DiscreteMeasure::line(&ys, &wy).unwrap();
            for q in [1.0, 2.0, 3.0] {
                let r = wq(&a, &b, q).unwrap();
                assert!(r.plan.marginal_error(&a, &b) < 1e-9);
                assert!((r.cost - monotone_1d(&a, &b, q).unwrap()).abs() < 1e-9);
            }
        }
    }

    fn cloud() -> impl Strategy<Value = DiscreteMeasure> {
        proptest::collection::vec(((0.0f64..10.0, 0.0f64..10.0), 0.05f64..1.0), 1..6).prop_map(|v| {
            let pts = v.iter().map(|&((x, y), _)| [x, y]).collect();
            let ws = v.iter().map(|&(_, w)| w).collect();
            DiscreteMeasure::normalized(2, pts, ws).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn symmetric(a in cloud(), b in cloud()) {
            let ab = wq(&a, &b, 2.0).unwrap().cost;
            let ba = wq(&b, &a, 2.0).unwrap().cost;
            prop_assert!((ab - ba).abs() < 1e-9);
        }

        #[test]
        fn triangle(a in cloud(), b in cloud(), c in cloud()) {
            for q in [1.0, 2.0] {
                let ab = wq(&a, &b, q).unwrap().cost;
                let bc = wq(&b, &c, q).unwrap().cost;
                let ac = wq(&a, &c, q).unwrap().cost;
                prop_assert!(ac <= ab + bc + 1e-9);
            }
        }

        #[test]
        fn monotone_in_q(a in cloud(), b in cloud()) {
            let w1 = wq(&a, &b, 1.0).unwrap().cost;
            let w2 = wq(&a, &b, 2.0).unwrap().cost;
            let w4 = wq(&a, &b, 4.0).unwrap().cost;
            prop_assert!(w1 <= w2 + 1e-9 && w2 <= w4 + 1e-9);
        }

        #[test]
        fn plans_are_feasible(a in cloud(), b in cloud()) {
            let r = wq(&a, &b, 1.5).unwrap();
            prop_assert!(r.plan.marginal_error(&a, &b) < 1e-9);
            prop_assert!(r.plan.entries.iter().all(|e| e.2 >= 0.0));
            prop_assert!((r.plan.cost(&a, &b, 1.5) - r.cost).abs() < 1e-9);
        }
    }
}
