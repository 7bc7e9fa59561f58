//! Minimizing movements for the isoperimetric (or Sobolev) ratio.
//!
//! Each step approximately minimizes `Φ(x) = φ(x) + d(x, x̄)²/(2τ)` over a
//! declared finite search family around the anchor `x̄`:
//!
//! * [`Family::Radial`]: every isolated support component is dilated about
//!   its center and reweighted by a piecewise-linear multiplier of its
//!   normalized radius `u = r/max r`, the dilation factor and the ring
//!   heights on a fixed ladder, and renormalized to its own mass. The
//!   product of the per-component families is searched exhaustively. The
//!   transport part of `d` is the radial bottleneck of each component (max
//!   over components), an accelerator that is cross-checked against the exact
//!   bottleneck on the accepted states.
//! * [`Family::GridLocalSearch`]: seeded first-improvement descent over
//!   transfers of a fixed mass quantum between adjacent cells, each candidate
//!   evaluated with the exact metric.
//!
//! The anchor is always a candidate, so `Φ(x_k) ≤ φ(x_{k−1})`.

mod local;
mod radial;

use serde::{Deserialize, Serialize};

use crate::error::{PlqpError, Result};
use crate::functionals::{jump_magnitudes, lebesgue_norm_raw};
use crate::measures::{coarse_atoms, dist, GridDensity, GridSpec};
use crate::plmetric::{lp_norm_diff, PLMetricParams};

pub use radial::radial_candidate;

/// Finite list of time steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepPartition {
    steps: Vec<f64>,
}

impl StepPartition {
    pub fn new(steps: Vec<f64>) -> Result<Self> {
        if steps.is_empty() {
            return Err(PlqpError::InvalidParameter("partition needs at least one step".into()));
        }
        if steps.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(PlqpError::InvalidParameter("steps must be positive and finite".into()));
        }
        Ok(Self { steps })
    }

    pub fn uniform(tau: f64, count: usize) -> Result<Self> {
        Self::new(vec![tau; count])
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }
    pub fn horizon(&self) -> f64 {
        self.steps.iter().sum()
    }
    pub fn sup_step(&self) -> f64 {
        self.steps.iter().copied().fold(0.0, f64::max)
    }

    /// Node times `t_0 = 0, t_j = τ_1 + … + τ_j`.
    pub fn nodes(&self) -> Vec<f64> {
        let mut t = vec![0.0];
        for s in &self.steps {
            t.push(t.last().unwrap() + s);
        }
        t
    }
}

/// Functional driving the scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Phi {
    Isop,
    Sobolev { r: f64 },
}

impl Phi {
    pub fn evaluate(&self, spec: &GridSpec, values: &[f64]) -> Result<f64> {
        let (num, den) = self.parts(spec, values)?;
        Ok(self.combine(num, den, spec.dim() as f64))
    }

    fn check(&self, spec: &GridSpec) -> Result<()> {
        match *self {
            Phi::Isop if spec.dim() == 1 => Err(PlqpError::IsopUndefinedInOneDim),
            Phi::Sobolev { r } if !(r > 1.0 && r < spec.dim() as f64) => {
                Err(PlqpError::InvalidParameter(format!("Sobolev exponent {r} outside (1, n)")))
            }
            _ => Ok(()),
        }
    }

    /// Exponent of the denominator norm.
    fn den_exponent(&self, n: f64) -> f64 {
        match *self {
            Phi::Isop => n / (n - 1.0),
            Phi::Sobolev { r } => n * r / (n - r),
        }
    }

    /// Additive numerator and denominator sums for a set of stencil jumps and
    /// cell values.
    fn sums(&self, spec: &GridSpec, jumps: impl Iterator<Item = f64>, values: impl Iterator<Item = f64>) -> (f64, f64) {
        let h = spec.h();
        let n = spec.dim() as f64;
        let vol = spec.cell_volume();
        let de = self.den_exponent(n);
        let num = match *self {
            Phi::Isop => jumps.sum::<f64>() * h.powi(spec.dim() as i32 - 1),
            Phi::Sobolev { r } => jumps.map(|j| (j / h).powf(r)).sum::<f64>() * vol,
        };
        let den = values.map(|v| if de == 2.0 { v * v } else { v.powf(de) }).sum::<f64>() * vol;
        (num, den)
    }

    fn parts(&self, spec: &GridSpec, values: &[f64]) -> Result<(f64, f64)> {
        self.check(spec)?;
        Ok(self.sums(spec, jump_magnitudes(spec, values), values.iter().copied()))
    }

    fn combine(&self, num: f64, den: f64, n: f64) -> f64 {
        match *self {
            Phi::Isop => num / den.powf((n - 1.0) / n),
            Phi::Sobolev { r } => num.powf(1.0 / r) / den.powf(1.0 / self.den_exponent(n)),
        }
    }
}

/// Search family of the resolvent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    Radial {
        /// Parameters per component (`2 ≤ rings ≤ 8`): one dilation level and
        /// `rings − 1` ring heights.
        rings: usize,
        /// Ladder levels per knot; the middle level is the identity.
        ladder: usize,
        /// Multiplier increment per ladder level.
        step: f64,
        /// Exact-bottleneck cross-check every this many scheme steps (0 = off).
        crosscheck_every: usize,
        /// Cap on the size of the candidate product.
        max_candidates: usize,
    },
    GridLocalSearch {
        /// Maximum number of candidate evaluations.
        budget: usize,
        /// Mass moved per transfer.
        quantum: f64,
        seed: u64,
    },
}

impl Family {
    pub fn radial_default() -> Self {
        Family::Radial { rings: 2, ladder: 32, step: 0.02, crosscheck_every: 5, max_candidates: 1 << 22 }
    }

    pub fn local_default(seed: u64) -> Self {
        Family::GridLocalSearch { budget: 400, quantum: 1e-3, seed }
    }

    pub fn describe(&self) -> String {
        match self {
            Family::Radial { rings, ladder, step, .. } => format!(
                "radial dilation and ring-height family: {rings} parameters x {ladder} levels (step {step}) per component; \
                 transport part = radial bottleneck per component, max over components"
            ),
            Family::GridLocalSearch { budget, quantum, .. } => format!(
                "grid local search: adjacent-cell transfers of {quantum} mass, budget {budget}, exact metric"
            ),
        }
    }
}

/// Everything but the step and the anchor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeTemplate {
    pub phi: Phi,
    pub family: Family,
    #[serde(default)]
    pub metric: PLMetricParams,
    /// Bottleneck atom cap for exact evaluations; larger states are
    /// block-aggregated.
    #[serde(default = "default_cap")]
    pub atom_cap: usize,
}

fn default_cap() -> usize {
    48 * 48
}

impl SchemeTemplate {
    pub fn isop(family: Family) -> Self {
        Self { phi: Phi::Isop, family, metric: PLMetricParams::infinity(), atom_cap: default_cap() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolventProblem {
    pub phi: Phi,
    pub tau: f64,
    pub anchor: GridDensity,
    pub family: Family,
    pub metric: PLMetricParams,
    pub atom_cap: usize,
}

impl ResolventProblem {
    pub fn new(template: &SchemeTemplate, tau: f64, anchor: GridDensity) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(PlqpError::InvalidParameter(format!("tau = {tau} must be positive")));
        }
        Ok(Self {
            phi: template.phi,
            tau,
            anchor,
            family: template.family.clone(),
            metric: template.metric,
            atom_cap: template.atom_cap,
        })
    }
}

/// Parts of the distance used inside `Φ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceParts {
    pub transport: f64,
    pub lebesgue: f64,
    pub total: f64,
}

/// Exact-metric re-evaluation of an accepted state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub transport: f64,
    pub total: f64,
    /// Block aggregation factor applied before the exact bottleneck solve.
    pub block_factor: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventDiagnostics {
    pub family: String,
    pub candidates_evaluated: u64,
    /// Radial: knot levels per component. Local search: accepted moves.
    pub best_parameters: Vec<Vec<usize>>,
    pub accepted_moves: usize,
    pub crosscheck: Option<CrossCheck>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolventOutcome {
    pub state: GridDensity,
    pub phi: f64,
    pub moreau: f64,
    pub distance: DistanceParts,
    pub diagnostics: ResolventDiagnostics,
}

/// Approximate `J_τ[anchor]` within the declared family.
pub fn resolvent(prob: &ResolventProblem) -> Result<ResolventOutcome> {
    prob.phi.check(prob.anchor.spec())?;
    match &prob.family {
        Family::Radial { .. } => radial::resolve(prob),
        Family::GridLocalSearch { .. } => local::resolve(prob),
    }
}

/// Exact `d_q^p` with block aggregation above the atom cap.
pub fn exact_distance(f: &GridDensity, g: &GridDensity, metric: &PLMetricParams, cap: usize) -> Result<CrossCheck> {
    let lebesgue = lp_norm_diff(f, g, metric.p)?;
    if f.values() == g.values() {
        return Ok(CrossCheck { transport: 0.0, total: lebesgue, block_factor: 1 });
    }
    let (ca, fa) = coarse_atoms(f, cap)?;
    let (cb, fb) = coarse_atoms(g, cap)?;
    let factor = fa.max(fb);
    let (ca, cb) = if fa == fb {
        (ca, cb)
    } else {
        (crate::measures::block_atoms(f, factor)?, crate::measures::block_atoms(g, factor)?)
    };
    let transport = if metric.q.is_infinite() {
        crate::bottleneck::winf_by(&ca, &cb, usize::MAX, &dist)?.value
    } else {
        crate::transport::wq_capped(&ca, &cb, metric.q, usize::MAX)?.cost
    };
    Ok(CrossCheck { transport, total: transport + lebesgue, block_factor: factor })
}

/// Per-step record of a discrete solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerStep {
    pub step: usize,
    pub tau: f64,
    pub time: f64,
    pub phi: f64,
    pub moreau: f64,
    pub movement: f64,
    pub transport: f64,
    pub lebesgue: f64,
    /// `φ(x_j) + Σ_{k≤j} d_k²/(2τ_k)`.
    pub dissipation: f64,
    pub diagnostics: ResolventDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ledger {
    pub family: String,
    pub phi0: f64,
    pub phi_kind: Phi,
    pub metric: PLMetricParams,
    /// Grid quantization bound of the transport part.
    pub quantization_bound: f64,
    pub steps: Vec<LedgerStep>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSolution {
    pub partition: StepPartition,
    /// `x_0, …, x_N`.
    pub states: Vec<GridDensity>,
    /// `φ(x_0), …, φ(x_N)`.
    pub phi_values: Vec<f64>,
    /// `Φ(x_k; τ_k, x_{k−1})` for `k = 1..N`.
    pub moreau_values: Vec<f64>,
    pub movement: Vec<f64>,
    pub outcomes: Vec<ResolventDiagnostics>,
    pub distances: Vec<DistanceParts>,
    pub template: SchemeTemplate,
}

impl DiscreteSolution {
    /// `φ(x_j) + Σ_{k≤j} d_k²/(2τ_k)` for `j = 0..N`.
    pub fn dissipation(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = vec![self.phi_values[0]];
        for (k, d) in self.movement.iter().enumerate() {
            acc += d * d / (2.0 * self.partition.steps()[k]);
            out.push(self.phi_values[k + 1] + acc);
        }
        out
    }

    /// Piecewise-constant interpolant: `x_j` on `(t_{j−1}, t_j]`.
    pub fn state_at(&self, t: f64) -> &GridDensity {
        let nodes = self.partition.nodes();
        let j = nodes.partition_point(|&s| s < t - 1e-12).min(self.states.len() - 1);
        &self.states[j]
    }

    pub fn ledger(&self) -> Ledger {
        let nodes = self.partition.nodes();
        let diss = self.dissipation();
        Ledger {
            family: self.template.family.describe(),
            phi0: self.phi_values[0],
            phi_kind: self.template.phi,
            metric: self.template.metric,
            quantization_bound: self.states[0].spec().quantization_bound(),
            steps: (0..self.movement.len())
                .map(|k| LedgerStep {
                    step: k + 1,
                    tau: self.partition.steps()[k],
                    time: nodes[k + 1],
                    phi: self.phi_values[k + 1],
                    moreau: self.moreau_values[k],
                    movement: self.movement[k],
                    transport: self.distances[k].transport,
                    lebesgue: self.distances[k].lebesgue,
                    dissipation: diss[k + 1],
                    diagnostics: self.outcomes[k].clone(),
                })
                .collect(),
        }
    }
}

/// Iterates the resolvent along a partition.
pub fn run_scheme(anchor: &GridDensity, partition: &StepPartition, template: &SchemeTemplate) -> Result<DiscreteSolution> {
    template.phi.check(anchor.spec())?;
    let phi0 = template.phi.evaluate(anchor.spec(), anchor.values())?;
    let mut sol = DiscreteSolution {
        partition: partition.clone(),
        states: vec![anchor.clone()],
        phi_values: vec![phi0],
        moreau_values: vec![],
        movement: vec![],
        outcomes: vec![],
        distances: vec![],
        template: template.clone(),
    };
    for (k, &tau) in partition.steps().iter().enumerate() {
        let prev = sol.states.last().unwrap().clone();
        let mut prob = ResolventProblem::new(template, tau, prev)?;
        if let Family::Radial { crosscheck_every, .. } = &mut prob.family {
            // cross-check on steps 1, 1 + every, ...
            if *crosscheck_every > 0 && k % *crosscheck_every != 0 {
                *crosscheck_every = 0;
            }
        }
        let out = resolvent(&prob)?;
        sol.phi_values.push(out.phi);
        sol.moreau_values.push(out.moreau);
        sol.movement.push(out.distance.total);
        sol.distances.push(out.distance);
        sol.outcomes.push(out.diagnostics);
        sol.states.push(out.state);
    }
    Ok(sol)
}

/// Comparison of two consecutive refinements at shared times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementPair {
    pub coarse_sup_step: f64,
    pub fine_sup_step: f64,
    pub times: Vec<f64>,
    /// `L^{n/(n−1)}` distance of the interpolants.
    pub density_distance: Vec<f64>,
    /// Exact `d_q^p` of the interpolants (block-aggregated above the cap).
    pub metric_distance: Vec<f64>,
    pub max_density_distance: f64,
    pub max_metric_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementReport {
    pub sup_steps: Vec<f64>,
    pub sample_times: Vec<f64>,
    /// `φ` of each interpolant at the sample times.
    pub phi_envelopes: Vec<Vec<f64>>,
    pub envelopes_monotone: Vec<bool>,
    pub pairs: Vec<RefinementPair>,
    pub note: String,
}

/// Runs the scheme on each partition and compares consecutive refinements.
pub fn refine_and_compare(
    anchor: &GridDensity,
    partitions: &[StepPartition],
    template: &SchemeTemplate,
) -> Result<RefinementReport> {
    if partitions.len() < 2 {
        return Err(PlqpError::NeedTwoPartitions);
    }
    let sols = partitions.iter().map(|p| run_scheme(anchor, p, template)).collect::<Result<Vec<_>>>()?;
    compare_solutions(&sols)
}

/// Refinement diagnostics for already computed discrete solutions sharing
/// their initial state. Sample times are the nodes of the coarsest partition
/// up to the shortest horizon.
pub fn compare_solutions(sols: &[DiscreteSolution]) -> Result<RefinementReport> {
    if sols.len() < 2 {
        return Err(PlqpError::NeedTwoPartitions);
    }
    let x0 = &sols[0].states[0];
    for (i, s) in sols.iter().enumerate().skip(1) {
        if s.states[0] != *x0 {
            return Err(PlqpError::MismatchedAnchors(format!("run {i} starts from a different state")));
        }
    }
    for w in sols.windows(2) {
        if !(w[1].partition.sup_step() < w[0].partition.sup_step()) {
            return Err(PlqpError::InvalidParameter("partitions must have decreasing sup step".into()));
        }
    }
    let horizon = sols.iter().map(|s| s.partition.horizon()).fold(f64::INFINITY, f64::min);
    let sample_times: Vec<f64> =
        sols[0].partition.nodes().into_iter().filter(|&t| t <= horizon + 1e-12).collect();
    let spec = x0.spec();
    let n = spec.dim() as f64;
    let de = if spec.dim() == 1 { 2.0 } else { n / (n - 1.0) };
    let template = &sols[0].template;
    let mut envelopes = Vec::new();
    for s in sols {
        envelopes.push(
            sample_times
                .iter()
                .map(|&t| template.phi.evaluate(spec, s.state_at(t).values()))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    let monotone = envelopes.iter().map(|e| e.windows(2).all(|w| w[1] <= w[0] + 1e-9)).collect();
    let mut pairs = Vec::new();
    for w in sols.windows(2) {
        let mut dd = Vec::new();
        let mut md = Vec::new();
        for &t in &sample_times {
            let (a, b) = (w[0].state_at(t), w[1].state_at(t));
            let diff: Vec<f64> = a.values().iter().zip(b.values()).map(|(x, y)| x - y).collect();
            dd.push(lebesgue_norm_raw(spec, &diff, de));
            md.push(exact_distance(a, b, &template.metric, template.atom_cap)?.total);
        }
        pairs.push(RefinementPair {
            coarse_sup_step: w[0].partition.sup_step(),
            fine_sup_step: w[1].partition.sup_step(),
            max_density_distance: dd.iter().copied().fold(0.0, f64::max),
            max_metric_distance: md.iter().copied().fold(0.0, f64::max),
            times: sample_times.clone(),
            density_distance: dd,
            metric_distance: md,
        });
    }
    Ok(RefinementReport {
        sup_steps: sols.iter().map(|s| s.partition.sup_step()).collect(),
        sample_times,
        phi_envelopes: envelopes,
        envelopes_monotone: monotone,
        pairs,
        note: "diagnostic only: no convergence of the interpolants is asserted".into(),
    })
}

#[cfg(test)]
mod tests;
