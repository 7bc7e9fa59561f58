//! Exact `W_∞` between discrete measures.
//!
//! `W_∞(μ, ν)` is the least `ε` with `μ(A) ≤ ν(A_ε)` for every set `A`,
//! `A_ε` the closed `ε`-neighbourhood. On finite supports the candidate
//! values are the pairwise distances, and feasibility at a threshold is a
//! bipartite max-flow over the pairs within it (Hall's condition). The
//! search runs over the sorted, deduplicated distance list, so the value is
//! always one of the pairwise distances and the final feasible flow is a
//! witness coupling.

use serde::{Deserialize, Serialize};

use crate::error::{PlqpError, Result};
use crate::graph::Dinic;
use crate::measures::{dist, grid_to_atoms, DiscreteMeasure, GridDensity, Point};
use crate::transport::{check_cap, for_each_permutation, integer_weights, uniform_pair, Coupling, MAX_ATOMS, SCALE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BottleneckResult {
    pub value: f64,
    pub witness_plan: Coupling,
    /// Rank of `value` in the sorted list of distinct pairwise distances.
    pub threshold_index: usize,
    /// Cell-center quantization bound `h√n/2` when the inputs came from
    /// grids.
    pub quantization_bound: Option<f64>,
}

struct Instance<'a> {
    mu: &'a DiscreteMeasure,
    nu: &'a DiscreteMeasure,
    d: Vec<f64>,
    wa: Vec<i64>,
    wb: Vec<i64>,
}

impl Instance<'_> {
    fn k(&self) -> usize {
        self.nu.len()
    }

    /// Max-flow restricted to pairs with `d ≤ eps`; returns the network and
    /// the forward ids of the pair edges.
    fn network(&self, eps: f64) -> (Dinic, Vec<(usize, usize, usize)>, i64) {
        let (m, k) = (self.mu.len(), self.k());
        let (s, t) = (m + k, m + k + 1);
        let mut g = Dinic::new(m + k + 2);
        for i in 0..m {
            g.add_edge(s, i, self.wa[i]);
        }
        let mut pairs = Vec::new();
        for i in 0..m {
            for j in 0..k {
                if self.d[i * k + j] <= eps {
                    let id = g.add_edge(i, m + j, SCALE as i64);
                    pairs.push((i, j, id));
                }
            }
        }
        for j in 0..k {
            g.add_edge(m + j, t, self.wb[j]);
        }
        let f = g.max_flow(s, t);
        (g, pairs, f)
    }

    /// Rounding slack: one integer unit per atom.
    fn slack(&self) -> i64 {
        (self.mu.len() + self.k()) as i64
    }

    fn feasible(&self, eps: f64) -> bool {
        self.network(eps).2 >= SCALE as i64 - self.slack()
    }
}

fn instance<'a>(
    mu: &'a DiscreteMeasure,
    nu: &'a DiscreteMeasure,
    metric: &dyn Fn(Point, Point) -> f64,
) -> Result<Instance<'a>> {
    if mu.dim() != nu.dim() {
        return Err(PlqpError::DimensionMismatch(format!("{} vs {}", mu.dim(), nu.dim())));
    }
    let d = mu
        .points()
        .iter()
        .flat_map(|&x| nu.points().iter().map(move |&y| metric(x, y)))
        .collect();
    Ok(Instance { mu, nu, d, wa: integer_weights(mu.weights()), wb: integer_weights(nu.weights()) })
}

/// Exact `W_∞` with the default atom cap.
pub fn winf(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<BottleneckResult> {
    winf_by(mu, nu, MAX_ATOMS, &dist)
}

/// Bottleneck value for an arbitrary ground metric.
pub fn winf_by(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cap: usize,
    metric: &dyn Fn(Point, Point) -> f64,
) -> Result<BottleneckResult> {
    check_cap(mu, nu, cap)?;
    let inst = instance(mu, nu, metric)?;
    let (m, k) = (mu.len(), nu.len());
    let mut levels = inst.d.clone();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    // every atom must reach some partner: the value is at least this
    let row_min = (0..m).map(|i| inst.d[i * k..(i + 1) * k].iter().copied().fold(f64::INFINITY, f64::min));
    let col_min = (0..k).map(|j| (0..m).map(|i| inst.d[i * k + j]).fold(f64::INFINITY, f64::min));
    let lb = row_min.chain(col_min).fold(0.0, f64::max);
    let mut lo = levels.partition_point(|&x| x < lb);
    let mut hi = levels.len() - 1;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if inst.feasible(levels[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let value = levels[lo];
    let (g, pairs, _) = inst.network(value);
    let entries = pairs
        .iter()
        .filter_map(|&(i, j, id)| {
            let f = g.flow(id);
            (f > 0).then(|| (i, j, f as f64 / SCALE))
        })
        .collect();
    Ok(BottleneckResult { value, witness_plan: Coupling { entries }, threshold_index: lo, quantization_bound: None })
}

/// `W_∞` between grid densities through their cell-center atoms.
pub fn winf_grid(f: &GridDensity, g: &GridDensity, cap: usize) -> Result<BottleneckResult> {
    if f.spec() != g.spec() {
        return Err(PlqpError::SpecMismatch);
    }
    let (a, b) = (grid_to_atoms(f)?, grid_to_atoms(g)?);
    let mut r = winf_by(&a, &b, cap, &dist)?;
    r.quantization_bound = Some(f.spec().quantization_bound());
    Ok(r)
}

/// Brute force over permutations for uniform measures with `m ≤ 8`.
pub fn winf_permutation_oracle(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    let m = uniform_pair(mu, nu)?;
    let d: Vec<Vec<f64>> =
        mu.points().iter().map(|&x| nu.points().iter().map(|&y| dist(x, y)).collect()).collect();
    let mut best = f64::INFINITY;
    for_each_permutation(m, |p| {
        let s = p.iter().enumerate().map(|(i, &j)| d[i][j]).fold(0.0, f64::max);
        best = best.min(s);
    });
    Ok(best)
}

/// `true` iff `μ(A) ≤ ν(A_ε) + 1e-12` for every probe `A` (a set of points;
/// only support points of `μ` carry mass).
pub fn neighborhood_check(mu: &DiscreteMeasure, nu: &DiscreteMeasure, eps: f64, probes: &[Vec<Point>]) -> bool {
    probes.iter().all(|probe| {
        let mass_a: f64 = mu
            .points()
            .iter()
            .zip(mu.weights())
            .filter(|(p, _)| probe.contains(p))
            .map(|(_, &w)| w)
            .sum();
        let mass_nb: f64 = nu
            .points()
            .iter()
            .zip(nu.weights())
            .filter(|(y, _)| probe.iter().any(|&x| dist(x, **y) <= eps))
            .map(|(_, &w)| w)
            .sum();
        mass_a <= mass_nb + 1e-12
    })
}

/// A set `A ⊆ spt μ` with `μ(A) > ν(A_ε)`, if one exists: the source side of
/// a minimum cut at threshold `eps`.
pub fn hall_violator(mu: &DiscreteMeasure, nu: &DiscreteMeasure, eps: f64) -> Result<Option<Vec<Point>>> {
    let inst = instance(mu, nu, &dist)?;
    let (g, _, f) = inst.network(eps);
    if f >= SCALE as i64 - inst.slack() {
        return Ok(None);
    }
    let reach = g.residual_reachable(mu.len() + nu.len());
    Ok(Some((0..mu.len()).filter(|&i| reach[i]).map(|i| mu.points()[i]).collect()))
}

/// Distribution of the distance to a center, as sorted `(radius, mass)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub center: Point,
    pub atoms: Vec<(f64, f64)>,
}

impl RadialProfile {
    pub fn new(center: Point, mut atoms: Vec<(f64, f64)>) -> Self {
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { center, atoms }
    }

    pub fn from_grid(g: &GridDensity, center: Point) -> Self {
        let spec = g.spec();
        let vol = spec.cell_volume();
        let atoms = g.support().into_iter().map(|i| (dist(spec.center(i), center), g.values()[i] * vol)).collect();
        Self::new(center, atoms)
    }

    pub fn from_values(spec: &crate::measures::GridSpec, values: &[f64], center: Point) -> Self {
        let vol = spec.cell_volume();
        let atoms = (0..spec.len())
            .filter(|&i| values[i] > 0.0)
            .map(|i| (dist(spec.center(i), center), values[i] * vol))
            .collect();
        Self::new(center, atoms)
    }

    pub fn mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }
}

const OVERLAP_FLOOR: f64 = 1e-13;

/// Bottleneck cost of the monotone rearrangement of the two radius
/// distributions. It is a lower bound for `W_∞` of the underlying measures
/// (the radius map is 1-Lipschitz), exact when the monotone radial coupling
/// is optimal. Quantile overlaps below `1e-13` mass are ignored.
pub fn winf_radial(a: &RadialProfile, b: &RadialProfile) -> Result<f64> {
    if dist(a.center, b.center) > 1e-12 {
        return Err(PlqpError::CenterMismatch);
    }
    if a.atoms.is_empty() || b.atoms.is_empty() {
        return Err(PlqpError::ZeroMass);
    }
    let (ta, tb) = (a.mass(), b.mass());
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (a.atoms[0].1 / ta, b.atoms[0].1 / tb);
    let mut worst = 0.0f64;
    loop {
        let f = ra.min(rb);
        if f > OVERLAP_FLOOR {
            worst = worst.max((a.atoms[i].0 - b.atoms[j].0).abs());
        }
        ra -= f;
        rb -= f;
        let adv_a = ra <= OVERLAP_FLOOR;
        let adv_b = rb <= OVERLAP_FLOOR;
        if adv_a {
            i += 1;
            if i == a.atoms.len() {
                break;
            }
            ra += a.atoms[i].1 / ta;
        }
        if adv_b {
            j += 1;
            if j == b.atoms.len() {
                break;
            }
            rb += b.atoms[j].1 / tb;
        }
    }
    Ok(worst)
}
