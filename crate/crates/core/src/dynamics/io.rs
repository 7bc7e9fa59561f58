//! Trajectories on disk: one `plqp-grid v1` file per density and field
//! component, listed with the time stamps in a JSON manifest.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Trajectory, VelocityField};
use crate::error::{PlqpError, Result};
use crate::measures::io::{load_density, read_grid, save_density, write_grid};

pub const MANIFEST_FORMAT: &str = "plqp-trajectory v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldFiles {
    pub x: Vec<String>,
    pub y: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryManifest {
    pub format: String,
    pub times: Vec<f64>,
    pub densities: Vec<String>,
    pub field: Option<FieldFiles>,
}

/// Writes `{stem}.json` and its grid files into `dir`; returns every path
/// written, manifest last.
pub fn write_trajectory(dir: &Path, stem: &str, traj: &Trajectory) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut densities = Vec::new();
    for (k, d) in traj.densities().iter().enumerate() {
        let name = format!("{stem}_density_{k:04}.csv");
        save_density(&dir.join(&name), d)?;
        written.push(dir.join(&name));
        densities.push(name);
    }
    let field = match traj.field() {
        None => None,
        Some(f) => {
            let mut files = FieldFiles { x: Vec::new(), y: Vec::new() };
            for k in 0..traj.len() {
                for (a, list) in [(0usize, &mut files.x), (1, &mut files.y)] {
                    let name = format!("{stem}_field_{}_{k:04}.csv", if a == 0 { 'x' } else { 'y' });
                    let comp: Vec<f64> = f.at(k).iter().map(|v| v[a]).collect();
                    write_grid(BufWriter::new(File::create(dir.join(&name))?), traj.spec(), &comp)?;
                    written.push(dir.join(&name));
                    list.push(name);
                }
            }
            Some(files)
        }
    };
    let manifest = TrajectoryManifest { format: MANIFEST_FORMAT.into(), times: traj.times().to_vec(), densities, field };
    let path = dir.join(format!("{stem}.json"));
    serde_json::to_writer_pretty(BufWriter::new(File::create(&path)?), &manifest)?;
    written.push(path);
    Ok(written)
}

fn open(dir: &Path, name: &str) -> Result<BufReader<File>> {
    let p = dir.join(name);
    File::open(&p)
        .map(BufReader::new)
        .map_err(|e| PlqpError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", p.display()))))
}

/// Reads a manifest written by [`write_trajectory`]; file names resolve
/// relative to the manifest's directory.
pub fn read_trajectory(manifest: &Path) -> Result<Trajectory> {
    let m: TrajectoryManifest = serde_json::from_reader(
        File::open(manifest)
            .map(BufReader::new)
            .map_err(|e| PlqpError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", manifest.display()))))?,
    )?;
    if m.format != MANIFEST_FORMAT {
        return Err(PlqpError::Parse { line: 0, msg: format!("unknown trajectory format {:?}", m.format) });
    }
    let dir = manifest.parent().unwrap_or(Path::new("."));
    let densities = m.densities.iter().map(|n| load_density(&dir.join(n))).collect::<Result<Vec<_>>>()?;
    let field = match &m.field {
        None => None,
        Some(files) => {
            if files.x.len() != m.times.len() || files.y.len() != m.times.len() {
                return Err(PlqpError::Parse { line: 0, msg: "field file count differs from times".into() });
            }
            let spec = densities.first().ok_or(PlqpError::ZeroMass)?.spec().clone();
            let mut values = Vec::new();
            for (fx, fy) in files.x.iter().zip(&files.y) {
                let (sx, vx) = read_grid(open(dir, fx)?)?;
                let (sy, vy) = read_grid(open(dir, fy)?)?;
                if sx != spec || sy != spec {
                    return Err(PlqpError::SpecMismatch);
                }
                values.push(vx.into_iter().zip(vy).map(|(a, b)| [a, b]).collect());
            }
            Some(VelocityField::new(spec, m.times.clone(), values)?)
        }
    };
    Trajectory::new(m.times, densities, field)
}
