//! `plqp-grid v1` text format.
//!
//! ```text
//! #plqp-grid v1 dim=2 shape=4x3 h=0.5 origin=-0.75,-0.5
//! v00,v10,v20,v30
//! v01,v11,v21,v31
//! v02,v12,v22,v32
//! ```
//!
//! `shape=<nx>x<ny>`; each line holds one grid row (fixed `y`, increasing
//! `x`), rows ordered by increasing `y`. 1D grids have a single line.
//! Writers emit 17 significant digits.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{PlqpError, Result};
use crate::measures::grid::{GridDensity, GridSpec, MASS_TOL};

pub const HEADER_TAG: &str = "#plqp-grid v1";

fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes raw cell values (any sign) in the grid format.
pub fn write_grid<W: Write>(mut w: W, spec: &GridSpec, values: &[f64]) -> Result<()> {
    let shape = spec.shape().iter().map(|s| s.to_string()).collect::<Vec<_>>().join("x");
    let origin = spec.origin().iter().map(|&o| fmt_num(o)).collect::<Vec<_>>().join(",");
    writeln!(w, "{HEADER_TAG} dim={} shape={shape} h={} origin={origin}", spec.dim(), fmt_num(spec.h()))?;
    for iy in 0..spec.ny() {
        let row: Vec<String> = (0..spec.nx()).map(|ix| fmt_num(values[spec.index(ix, iy)])).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Reads raw cell values. No density validation is applied.
pub fn read_grid<R: BufRead>(r: R) -> Result<(GridSpec, Vec<f64>)> {
    let mut lines = r.lines().enumerate();
    let (_, header) = lines.next().ok_or(PlqpError::Parse { line: 1, msg: "empty file".into() })?;
    let header = header?;
    let spec = parse_header(header.trim())?;
    let mut values = Vec::with_capacity(spec.len());
    let mut rows = 0;
    for (ln, line) in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|t| {
                t.trim().parse::<f64>().map_err(|e| PlqpError::Parse { line: ln + 1, msg: format!("bad number {t:?}: {e}") })
            })
            .collect::<Result<_>>()?;
        if row.len() != spec.nx() {
            return Err(PlqpError::Parse {
                line: ln + 1,
                msg: format!("row has {} values, expected {}", row.len(), spec.nx()),
            });
        }
        values.extend(row);
        rows += 1;
    }
    if rows != spec.ny() {
        return Err(PlqpError::Parse { line: rows + 1, msg: format!("found {rows} rows, expected {}", spec.ny()) });
    }
    Ok((spec, values))
}

fn parse_header(line: &str) -> Result<GridSpec> {
    let bad = |msg: String| PlqpError::Parse { line: 1, msg };
    let rest = line
        .strip_prefix(HEADER_TAG)
        .ok_or_else(|| bad(format!("header must start with {HEADER_TAG:?}")))?;
    let (mut dim, mut shape, mut h, mut origin) = (None, None, None, None);
    for tok in rest.split_whitespace() {
        let (k, v) = tok.split_once('=').ok_or_else(|| bad(format!("bad token {tok:?}")))?;
        match k {
            "dim" => dim = Some(v.parse::<usize>().map_err(|e| bad(format!("dim: {e}")))?),
            "shape" => {
                shape = Some(
                    v.split('x')
                        .map(|s| s.parse::<usize>().map_err(|e| bad(format!("shape: {e}"))))
                        .collect::<Result<Vec<_>>>()?,
                )
            }
            "h" => h = Some(v.parse::<f64>().map_err(|e| bad(format!("h: {e}")))?),
            "origin" => {
                origin = Some(
                    v.split(',')
                        .map(|s| s.parse::<f64>().map_err(|e| bad(format!("origin: {e}"))))
                        .collect::<Result<Vec<_>>>()?,
                )
            }
            other => return Err(bad(format!("unknown key {other:?}"))),
        }
    }
    let dim = dim.ok_or_else(|| bad("missing dim".into()))?;
    let shape = shape.ok_or_else(|| bad("missing shape".into()))?;
    let h = h.ok_or_else(|| bad("missing h".into()))?;
    let origin = origin.ok_or_else(|| bad("missing origin".into()))?;
    GridSpec::new(dim, &shape, h, &origin).map_err(|e| bad(e.to_string()))
}

pub fn write_density<W: Write>(w: W, g: &GridDensity) -> Result<()> {
    write_grid(w, g.spec(), g.values())
}

/// Reads and validates a density. Values already at unit mass are kept
/// as written; others are renormalized.
pub fn read_density<R: BufRead>(r: R) -> Result<GridDensity> {
    let (spec, values) = read_grid(r)?;
    let mass = values.iter().sum::<f64>() * spec.cell_volume();
    if (mass - 1.0).abs() <= MASS_TOL {
        GridDensity::new(spec, values)
    } else {
        GridDensity::normalized(spec, values)
    }
}

/// Loads a density file; I/O errors name the path.
pub fn load_density(path: &Path) -> Result<GridDensity> {
    let f = std::fs::File::open(path)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    read_density(std::io::BufReader::new(f))
}

pub fn save_density(path: &Path, g: &GridDensity) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_density(&mut w, g)?;
    w.flush()?;
    Ok(())
}
