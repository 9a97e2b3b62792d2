//! File formats: STL, PLY, contact and IMU CSVs, JSON documents.
//!
//! ASCII floats are written with nine significant digits so outputs are
//! byte-stable across platforms.

pub mod csv;
pub mod ply;
pub mod stl;

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::{PointCloud, TriangleMesh};

/// Shortest decimal for `v` rounded to nine significant digits.
pub fn fmt_sig9(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let rounded: f64 = format!("{v:.8e}").parse().expect("formatted float parses");
    if rounded == 0.0 {
        return "0".into();
    }
    format!("{rounded}")
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = read_bytes(path)?;
    serde_json::from_slice(&bytes).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: e.line() as u64,
        msg: e.to_string(),
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    StlAscii,
    StlBinary,
    Ply,
}

impl MeshFormat {
    /// `.ply` selects PLY, anything else binary STL.
    pub fn from_path(path: &Path) -> MeshFormat {
        match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()) {
            Some(e) if e == "ply" => MeshFormat::Ply,
            _ => MeshFormat::StlBinary,
        }
    }
}

pub fn write_mesh(path: &Path, mesh: &TriangleMesh, format: MeshFormat) -> Result<()> {
    let bytes = match format {
        MeshFormat::StlAscii => stl::to_ascii(mesh, "mesh").into_bytes(),
        MeshFormat::StlBinary => stl::to_binary(mesh),
        MeshFormat::Ply => ply::to_ascii(mesh).into_bytes(),
    };
    write_bytes(path, &bytes)
}

/// Read an STL or PLY mesh, chosen by extension.
pub fn read_mesh(path: &Path) -> Result<TriangleMesh> {
    match MeshFormat::from_path(path) {
        MeshFormat::Ply => ply::read_ply(path)?
            .1
            .ok_or_else(|| Error::Format(format!("{}: PLY has no faces", path.display()))),
        _ => stl::read_stl(path),
    }
}

/// Read a point cloud: vertices of a PLY (faces optional) or of an STL.
pub fn read_cloud(path: &Path) -> Result<PointCloud> {
    match MeshFormat::from_path(path) {
        MeshFormat::Ply => Ok(ply::read_ply(path)?.0),
        _ => Ok(stl::read_stl(path)?.vertex_cloud()),
    }
}
