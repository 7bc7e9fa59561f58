//! The composite metric `d_q^p(f, g) = W_q(f, g) + ‖f − g‖_{L^p}` on grid
//! densities and difference-quotient metric derivatives along trajectories.

use serde::{Deserialize, Serialize};

use crate::bottleneck::winf_by;
use crate::dynamics::Trajectory;
use crate::error::{PlqpError, Result};
use crate::measures::{dist, grid_to_atoms, GridDensity};
use crate::transport::{wq_capped, MAX_ATOMS};

/// Serializes exponents with `"inf"` for `f64::INFINITY`.
pub mod exponent {
    use serde::{de::Error, Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            "inf".serialize(s)
        } else {
            v.serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => parse(&t).map_err(D::Error::custom),
        }
    }

    /// Parses a number or `inf`/`infinity`.
    pub fn parse(t: &str) -> Result<f64, String> {
        match t.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(f64::INFINITY),
            s => s.parse::<f64>().map_err(|e| format!("bad exponent {t:?}: {e}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PLMetricParams {
    #[serde(with = "exponent")]
    pub q: f64,
    #[serde(with = "exponent")]
    pub p: f64,
}

impl PLMetricParams {
    pub fn new(q: f64, p: f64) -> Result<Self> {
        if !(q > 1.0) {
            return Err(PlqpError::InvalidParameter(format!("q = {q} must exceed 1")));
        }
        if !(p >= 1.0) {
            return Err(PlqpError::InvalidParameter(format!("p = {p} must be >= 1")));
        }
        Ok(Self { q, p })
    }

    /// `q = p = ∞`.
    pub fn infinity() -> Self {
        Self { q: f64::INFINITY, p: f64::INFINITY }
    }
}

impl Default for PLMetricParams {
    fn default() -> Self {
        Self::infinity()
    }
}

/// `(Σ|f − g|^p hⁿ)^{1/p}`, or the cell maximum for `p = ∞`.
pub fn lp_norm_diff(f: &GridDensity, g: &GridDensity, p: f64) -> Result<f64> {
    if f.spec() != g.spec() {
        return Err(PlqpError::SpecMismatch);
    }
    Ok(lp_norm_raw(f.values(), g.values(), f.spec().cell_volume(), p))
}

pub(crate) fn lp_norm_raw(a: &[f64], b: &[f64], vol: f64, p: f64) -> f64 {
    let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
    if p.is_infinite() {
        diffs.fold(0.0, f64::max)
    } else if p == 1.0 {
        diffs.sum::<f64>() * vol
    } else {
        (diffs.map(|d| d.powf(p)).sum::<f64>() * vol).powf(1.0 / p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DqpBreakdown {
    pub total: f64,
    pub transport: f64,
    pub lebesgue: f64,
    /// Cell-center quantization bound on the transport part.
    pub quantization_bound: f64,
}

/// `W_q` (or `W_∞`) between grid densities via their cell atoms. The
/// arguments are put in a canonical order first, so the result is exactly
/// symmetric.
pub fn transport_part(f: &GridDensity, g: &GridDensity, q: f64, cap: usize) -> Result<f64> {
    if f.spec() != g.spec() {
        return Err(PlqpError::SpecMismatch);
    }
    let (a, b) = if canonical_le(f, g) { (f, g) } else { (g, f) };
    if a.values() == b.values() {
        return Ok(0.0);
    }
    let (ma, mb) = (grid_to_atoms(a)?, grid_to_atoms(b)?);
    if q.is_infinite() {
        Ok(winf_by(&ma, &mb, cap, &dist)?.value)
    } else {
        Ok(wq_capped(&ma, &mb, q, cap)?.cost)
    }
}

fn canonical_le(f: &GridDensity, g: &GridDensity) -> bool {
    for (x, y) in f.values().iter().zip(g.values()) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            _ => {}
        }
    }
    true
}

pub fn dqp(f: &GridDensity, g: &GridDensity, params: &PLMetricParams) -> Result<DqpBreakdown> {
    dqp_capped(f, g, params, MAX_ATOMS)
}

pub fn dqp_capped(f: &GridDensity, g: &GridDensity, params: &PLMetricParams, cap: usize) -> Result<DqpBreakdown> {
    let transport = transport_part(f, g, params.q, cap)?;
    let lebesgue = lp_norm_diff(f, g, params.p)?;
    Ok(DqpBreakdown { total: transport + lebesgue, transport, lebesgue, quantization_bound: f.spec().quantization_bound() })
}

/// Difference quotients of `d_q^p` along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeEstimate {
    pub times: Vec<f64>,
    pub quotient: Vec<f64>,
    pub transport: Vec<f64>,
    pub lebesgue: Vec<f64>,
}

/// Central quotients `d(μ_{k+1}, μ_{k−1})/(t_{k+1} − t_{k−1})` in the
/// interior, one-sided at both ends.
pub fn metric_derivative(traj: &Trajectory, params: &PLMetricParams) -> Result<DerivativeEstimate> {
    let n = traj.len();
    if n < 3 {
        return Err(PlqpError::TooFewSamples { needed: 3, got: n });
    }
    let d = traj.densities();
    let t = traj.times();
    let mut est = DerivativeEstimate { times: t.to_vec(), quotient: vec![], transport: vec![], lebesgue: vec![] };
    for k in 0..n {
        let (a, b) = match k {
            0 => (0, 1),
            _ if k == n - 1 => (n - 2, n - 1),
            _ => (k - 1, k + 1),
        };
        let r = dqp(&d[a], &d[b], params)?;
        let dt = t[b] - t[a];
        est.transport.push(r.transport / dt);
        est.lebesgue.push(r.lebesgue / dt);
        est.quotient.push(r.total / dt);
    }
    Ok(est)
}
