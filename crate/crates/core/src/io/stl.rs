//! STL reader and writers (ASCII and little-endian binary).

use std::collections::HashMap;
use std::path::Path;

use super::{fmt_sig9, read_bytes};
use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;
use crate::Vec3;

const HEADER_LEN: usize = 80;
const RECORD_LEN: usize = 50;

fn unit_normal(a: Vec3, b: Vec3, c: Vec3) -> Vec3 {
    let n = (b - a).cross(&(c - a));
    let len = n.norm();
    if len > 0.0 {
        n / len
    } else {
        Vec3::zeros()
    }
}

fn facet_normal(mesh: &TriangleMesh, i: usize) -> Vec3 {
    let [a, b, c] = mesh.triangle(i);
    unit_normal(a, b, c)
}

pub fn to_ascii(mesh: &TriangleMesh, name: &str) -> String {
    let v3 = |v: &Vec3| format!("{} {} {}", fmt_sig9(v.x), fmt_sig9(v.y), fmt_sig9(v.z));
    let mut out = format!("solid {name}\n");
    for i in 0..mesh.triangles.len() {
        out.push_str(&format!("  facet normal {}\n    outer loop\n", v3(&facet_normal(mesh, i))));
        for v in mesh.triangle(i) {
            out.push_str(&format!("      vertex {}\n", v3(&v)));
        }
        out.push_str("    endloop\n  endfacet\n");
    }
    out.push_str(&format!("endsolid {name}\n"));
    out
}

pub fn to_binary(mesh: &TriangleMesh) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 + RECORD_LEN * mesh.triangles.len());
    let mut header = [b' '; HEADER_LEN];
    let tag = b"binary STL";
    header[..tag.len()].copy_from_slice(tag);
    out.extend_from_slice(&header);
    out.extend_from_slice(&(mesh.triangles.len() as u32).to_le_bytes());
    let put = |out: &mut Vec<u8>, v: &Vec3| {
        for c in [v.x, v.y, v.z] {
            out.extend_from_slice(&(c as f32).to_le_bytes());
        }
    };
    for i in 0..mesh.triangles.len() {
        // Normals from the stored single-precision corners, so re-encoding a
        // parsed file reproduces it byte for byte.
        let [a, b, c] = mesh.triangle(i).map(|v| v.map(|x| x as f32 as f64));
        put(&mut out, &unit_normal(a, b, c));
        for v in [a, b, c] {
            put(&mut out, &v);
        }
        out.extend_from_slice(&0u16.to_le_bytes());
    }
    out
}

/// Build an indexed mesh from a triangle soup, merging bit-identical vertices
/// in first-seen order.
pub fn weld(soup: &[[Vec3; 3]]) -> TriangleMesh {
    let mut lookup: HashMap<[u64; 3], u32> = HashMap::new();
    let mut vertices = Vec::new();
    let mut triangles = Vec::with_capacity(soup.len());
    for tri in soup {
        let mut idx = [0u32; 3];
        for (k, v) in tri.iter().enumerate() {
            // Fold -0.0 onto 0.0 so they weld.
            let key = [v.x + 0.0, v.y + 0.0, v.z + 0.0].map(f64::to_bits);
            idx[k] = *lookup.entry(key).or_insert_with(|| {
                vertices.push(*v);
                (vertices.len() - 1) as u32
            });
        }
        triangles.push(idx);
    }
    TriangleMesh::new(vertices, triangles)
}

fn is_binary(bytes: &[u8]) -> bool {
    if bytes.len() < HEADER_LEN + 4 {
        return false;
    }
    let n = u32::from_le_bytes(bytes[HEADER_LEN..HEADER_LEN + 4].try_into().unwrap()) as usize;
    let exact = HEADER_LEN + 4 + n.saturating_mul(RECORD_LEN) == bytes.len();
    exact || !bytes.trim_ascii_start().starts_with(b"solid")
}

pub fn parse_binary(bytes: &[u8], path: &str) -> Result<TriangleMesh> {
    let fmt = |msg: String| Error::Format(format!("{path}: {msg}"));
    if bytes.len() < HEADER_LEN + 4 {
        return Err(fmt("binary STL shorter than its header".into()));
    }
    let n = u32::from_le_bytes(bytes[HEADER_LEN..HEADER_LEN + 4].try_into().unwrap()) as usize;
    let expected = HEADER_LEN + 4 + n * RECORD_LEN;
    if bytes.len() != expected {
        return Err(fmt(format!(
            "binary STL declares {n} triangles ({expected} bytes) but has {} bytes",
            bytes.len()
        )));
    }
    let f = |off: usize| f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) as f64;
    let mut soup = Vec::with_capacity(n);
    for t in 0..n {
        let base = HEADER_LEN + 4 + t * RECORD_LEN + 12;
        let v = |k: usize| Vec3::new(f(base + 12 * k), f(base + 12 * k + 4), f(base + 12 * k + 8));
        soup.push([v(0), v(1), v(2)]);
    }
    finish(soup, path)
}

pub fn parse_ascii(text: &str, path: &str) -> Result<TriangleMesh> {
    let err = |line: usize, msg: &str| Error::Parse {
        path: path.to_string(),
        line: line as u64,
        msg: msg.to_string(),
    };
    let mut soup = Vec::new();
    let mut current: Vec<Vec3> = Vec::with_capacity(3);
    let mut saw_solid = false;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let mut tok = raw.split_whitespace();
        match tok.next() {
            None => {}
            Some("solid") => saw_solid = true,
            Some("vertex") => {
                let mut c = [0.0; 3];
                for slot in &mut c {
                    let s = tok.next().ok_or_else(|| err(line, "vertex needs three coordinates"))?;
                    *slot = s.parse().map_err(|_| err(line, &format!("bad coordinate {s:?}")))?;
                }
                if current.len() == 3 {
                    return Err(err(line, "more than three vertices in a facet"));
                }
                current.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("endfacet") => {
                if current.len() != 3 {
                    return Err(err(line, "facet without three vertices"));
                }
                soup.push([current[0], current[1], current[2]]);
                current.clear();
            }
            Some("facet") | Some("outer") | Some("endloop") | Some("endsolid") => {}
            Some(other) => return Err(err(line, &format!("unexpected keyword {other:?}"))),
        }
    }
    if !saw_solid {
        return Err(err(1, "missing 'solid' header"));
    }
    finish(soup, path)
}

fn finish(soup: Vec<[Vec3; 3]>, path: &str) -> Result<TriangleMesh> {
    if soup.is_empty() {
        return Err(Error::Format(format!("{path}: STL has no triangles")));
    }
    if soup.iter().flatten().any(|v| !v.iter().all(|c| c.is_finite())) {
        return Err(Error::Format(format!("{path}: STL has non-finite coordinates")));
    }
    Ok(weld(&soup))
}

pub fn parse_stl(bytes: &[u8], path: &str) -> Result<TriangleMesh> {
    if is_binary(bytes) {
        parse_binary(bytes, path)
    } else {
        let text = std::str::from_utf8(bytes).map_err(|_| Error::Format(format!("{path}: ASCII STL is not UTF-8")))?;
        parse_ascii(text, path)
    }
}

pub fn read_stl(path: &Path) -> Result<TriangleMesh> {
    parse_stl(&read_bytes(path)?, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad() -> TriangleMesh {
        TriangleMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 1.5),
                Vec3::new(10.0, 0.0, 1.5),
                Vec3::new(10.0, 10.0, 2.25),
                Vec3::new(0.0, 10.0, 2.25),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
    }

    #[test]
    fn binary_layout_and_round_trip() {
        let m = quad();
        let bytes = to_binary(&m);
        assert_eq!(bytes.len(), 84 + 2 * 50);
        assert_eq!(u32::from_le_bytes(bytes[80..84].try_into().unwrap()), 2);
        let back = parse_stl(&bytes, "mem").unwrap();
        assert_eq!(back, m);
        assert_eq!(to_binary(&back), bytes);
    }

    #[test]
    fn ascii_round_trip() {
        let m = quad();
        let text = to_ascii(&m, "quad");
        assert!(text.starts_with("solid quad\n"));
        let back = parse_stl(text.as_bytes(), "mem").unwrap();
        assert_eq!(back, m);
        assert_eq!(to_ascii(&back, "quad"), text);
    }

    #[test]
    fn binary_header_may_start_with_solid() {
        let mut bytes = to_binary(&quad());
        bytes[..5].copy_from_slice(b"solid");
        assert_eq!(parse_stl(&bytes, "mem").unwrap(), quad());
    }

    #[test]
    fn malformed_inputs() {
        let bad = "solid x\n facet normal 0 0 1\n outer loop\n vertex 0 0\n";
        match parse_stl(bad.as_bytes(), "f.stl") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        let mut bytes = to_binary(&quad());
        bytes.pop();
        assert!(matches!(parse_binary(&bytes, "f.stl"), Err(Error::Format(_))));
        assert!(parse_stl(b"solid e\nendsolid e\n", "f.stl").is_err());
    }
}
