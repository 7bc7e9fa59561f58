//! Output directory bookkeeping: every written file is tracked so a failed
//! command can remove what it produced, and a successful one lists the files
//! with their SHA-256 in `manifest.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Serialize)]
struct Entry {
    path: String,
    bytes: u64,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest {
    command: String,
    files: Vec<Entry>,
}

pub struct OutDir {
    root: PathBuf,
    created_root: bool,
    written: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(root: &Path) -> std::io::Result<Self> {
        let created_root = !root.exists();
        fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf(), created_root, written: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn track(&mut self, paths: impl IntoIterator<Item = PathBuf>) {
        self.written.extend(paths);
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<PathBuf> {
        let path = self.root.join(name);
        // track before writing so a half-written file is also cleaned up
        self.written.push(path.clone());
        fs::write(&path, to_json(value)?)?;
        Ok(path)
    }

    /// Writes `manifest.json` over every tracked file, sorted by name.
    pub fn finish(mut self, command: &str) -> std::io::Result<()> {
        let mut files = Vec::new();
        let mut paths = self.written.clone();
        paths.sort();
        paths.dedup();
        for p in &paths {
            let bytes = fs::read(p)?;
            let rel = p.strip_prefix(&self.root).unwrap_or(p).to_string_lossy().replace('\\', "/");
            files.push(Entry { path: rel, bytes: bytes.len() as u64, sha256: hex::encode(Sha256::digest(&bytes)) });
        }
        let manifest = Manifest { command: command.into(), files };
        self.write_json(MANIFEST, &manifest)?;
        self.written.clear();
        Ok(())
    }

    /// Removes every tracked file, and the directory itself if this run
    /// created it and nothing else is left.
    pub fn discard(mut self) {
        for p in self.written.drain(..) {
            let _ = fs::remove_file(p);
        }
        if self.created_root {
            let _ = fs::remove_dir(&self.root);
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> std::io::Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    s.push('\n');
    Ok(s)
}
