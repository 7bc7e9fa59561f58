use std::collections::HashMap;

use crate::error::{PlqpError, Result};
use crate::measures::grid::{GridDensity, Point};

/// Tolerance on the total weight of a [`DiscreteMeasure`].
pub const WEIGHT_TOL: f64 = 1e-12;

/// Finitely supported probability measure `Σ wᵢ δ_{xᵢ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    points: Vec<Point>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Validating constructor. Duplicate points are merged (first occurrence
    /// keeps its position in the list).
    pub fn new(dim: usize, points: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        let m = Self::build(dim, points, weights)?;
        let total: f64 = m.weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(PlqpError::InvalidMeasure(format!("weights sum to {total}")));
        }
        Ok(m)
    }

    /// Like [`DiscreteMeasure::new`] but rescales the weights to unit sum.
    pub fn normalized(dim: usize, points: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        let mut m = Self::build(dim, points, weights)?;
        let total: f64 = m.weights.iter().sum();
        m.weights.iter_mut().for_each(|w| *w /= total);
        Ok(m)
    }

    /// Uniform weights `1/m`.
    pub fn uniform(dim: usize, points: Vec<Point>) -> Result<Self> {
        let m = points.len();
        Self::normalized(dim, points, vec![1.0 / m as f64; m])
    }

    /// Convenience constructor for 1D measures.
    pub fn line(xs: &[f64], weights: &[f64]) -> Result<Self> {
        Self::normalized(1, xs.iter().map(|&x| [x, 0.0]).collect(), weights.to_vec())
    }

    fn build(dim: usize, points: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(PlqpError::InvalidMeasure(format!("dimension {dim}")));
        }
        if points.is_empty() {
            return Err(PlqpError::InvalidMeasure("empty support".into()));
        }
        if points.len() != weights.len() {
            return Err(PlqpError::InvalidMeasure("points/weights length mismatch".into()));
        }
        let mut merged_points: Vec<Point> = Vec::with_capacity(points.len());
        let mut merged_weights: Vec<f64> = Vec::with_capacity(points.len());
        let mut seen: HashMap<(u64, u64), usize> = HashMap::new();
        for (p, w) in points.into_iter().zip(weights) {
            if !(w > 0.0 && w.is_finite()) {
                return Err(PlqpError::InvalidMeasure(format!("weight {w} not positive")));
            }
            if p.iter().any(|c| !c.is_finite()) || (dim == 1 && p[1] != 0.0) {
                return Err(PlqpError::InvalidMeasure(format!("bad point {p:?}")));
            }
            // +0.0 and -0.0 are the same point
            let key = ((p[0] + 0.0).to_bits(), (p[1] + 0.0).to_bits());
            match seen.get(&key) {
                Some(&k) => merged_weights[k] += w,
                None => {
                    seen.insert(key, merged_points.len());
                    merged_points.push(p);
                    merged_weights.push(w);
                }
            }
        }
        Ok(Self { dim, points: merged_points, weights: merged_weights })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn len(&self) -> usize {
        self.points.len()
    }
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
    pub fn points(&self) -> &[Point] {
        &self.points
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Euclidean distance in ℝ².
#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

/// One atom per positive cell at the cell center, weight `value·hⁿ`.
pub fn grid_to_atoms(g: &GridDensity) -> Result<DiscreteMeasure> {
    let spec = g.spec();
    let vol = spec.cell_volume();
    let support = g.support();
    if support.is_empty() {
        return Err(PlqpError::ZeroMass);
    }
    let points = support.iter().map(|&i| spec.center(i)).collect();
    let weights = support.iter().map(|&i| g.values()[i] * vol).collect();
    DiscreteMeasure::normalized(spec.dim(), points, weights)
}

/// Grid atoms aggregated over `factor`-sized blocks so that at most
/// `max_atoms` atoms remain. Each block's mass sits at the block's geometric
/// center. Returns the measure and the block factor used.
pub fn coarse_atoms(g: &GridDensity, max_atoms: usize) -> Result<(DiscreteMeasure, usize)> {
    let support = g.support().len();
    if support <= max_atoms {
        return Ok((grid_to_atoms(g)?, 1));
    }
    let mut factor = 2;
    loop {
        let m = block_atoms(g, factor)?;
        if m.len() <= max_atoms {
            return Ok((m, factor));
        }
        factor += 1;
    }
}

/// Block aggregation with a fixed factor.
pub fn block_atoms(g: &GridDensity, factor: usize) -> Result<DiscreteMeasure> {
    let spec = g.spec();
    let vol = spec.cell_volume();
    let h = spec.h();
    let mut blocks: HashMap<(usize, usize), f64> = HashMap::new();
    for i in g.support() {
        let (ix, iy) = spec.coords(i);
        *blocks.entry((ix / factor, iy / factor)).or_insert(0.0) += g.values()[i] * vol;
    }
    let mut keys: Vec<_> = blocks.keys().cloned().collect();
    keys.sort_by_key(|&(bx, by)| (by, bx));
    let offset = 0.5 * (factor as f64 - 1.0) * h;
    let points = keys
        .iter()
        .map(|&(bx, by)| {
            let c = spec.center_of(bx * factor, by * factor);
            if spec.dim() == 1 {
                [c[0] + offset, 0.0]
            } else {
                [c[0] + offset, c[1] + offset]
            }
        })
        .collect();
    let weights = keys.iter().map(|k| blocks[k]).collect();
    DiscreteMeasure::normalized(spec.dim(), points, weights)
}
