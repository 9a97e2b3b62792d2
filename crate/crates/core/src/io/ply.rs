//! ASCII PLY for meshes and point clouds.

use std::path::Path;

use super::{fmt_sig9, read_bytes};
use crate::error::{Error, Result};
use crate::mesh::{PointCloud, TriangleMesh};
use crate::Vec3;

fn header(vertices: usize, faces: Option<usize>) -> String {
    let mut h = String::from("ply\nformat ascii 1.0\n");
    h.push_str(&format!(
        "element vertex {vertices}\nproperty double x\nproperty double y\nproperty double z\n"
    ));
    if let Some(f) = faces {
        h.push_str(&format!("element face {f}\nproperty list uchar int vertex_indices\n"));
    }
    h.push_str("end_header\n");
    h
}

fn push_vertices(out: &mut String, points: &[Vec3]) {
    for v in points {
        out.push_str(&format!("{} {} {}\n", fmt_sig9(v.x), fmt_sig9(v.y), fmt_sig9(v.z)));
    }
}

pub fn to_ascii(mesh: &TriangleMesh) -> String {
    let mut out = header(mesh.vertices.len(), Some(mesh.triangles.len()));
    push_vertices(&mut out, &mesh.vertices);
    for [a, b, c] in &mesh.triangles {
        out.push_str(&format!("3 {a} {b} {c}\n"));
    }
    out
}

pub fn cloud_to_ascii(cloud: &PointCloud) -> String {
    let mut out = header(cloud.len(), None);
    push_vertices(&mut out, &cloud.points);
    out
}

struct Element {
    name: String,
    count: usize,
    /// Property names; list properties are recorded with a `list:` prefix.
    props: Vec<String>,
}

/// Parse ASCII PLY into its vertex cloud and, when faces are present, a mesh.
/// Polygons with more than three corners are fan-triangulated.
pub fn parse_ply(text: &str, path: &str) -> Result<(PointCloud, Option<TriangleMesh>)> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_string(),
        line: line as u64,
        msg,
    };
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l.trim()));
    match lines.next() {
        Some((_, "ply")) => {}
        _ => return Err(err(1, "missing 'ply' magic".into())),
    }

    let mut elements: Vec<Element> = Vec::new();
    let mut ended = false;
    for (line, l) in lines.by_ref() {
        let tok: Vec<&str> = l.split_whitespace().collect();
        match tok.as_slice() {
            ["format", "ascii", _] => {}
            ["format", other, ..] => return Err(err(line, format!("unsupported PLY format {other:?}"))),
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count.parse().map_err(|_| err(line, format!("bad element count {count:?}")))?,
                props: Vec::new(),
            }),
            ["property", "list", _, _, name] => elements
                .last_mut()
                .ok_or_else(|| err(line, "property before element".into()))?
                .props
                .push(format!("list:{name}")),
            ["property", _, name] => elements
                .last_mut()
                .ok_or_else(|| err(line, "property before element".into()))?
                .props
                .push(name.to_string()),
            ["end_header"] => {
                ended = true;
                break;
            }
            _ => return Err(err(line, format!("unexpected header line {l:?}"))),
        }
    }
    if !ended {
        return Err(err(text.lines().count(), "missing end_header".into()));
    }

    let mut points = Vec::new();
    let mut faces: Option<Vec<[u32; 3]>> = None;
    for el in &elements {
        let xyz = ["x", "y", "z"].map(|n| el.props.iter().position(|p| p == n));
        for _ in 0..el.count {
            let (line, l) = lines
                .by_ref()
                .find(|(_, l)| !l.is_empty())
                .ok_or_else(|| err(text.lines().count(), format!("truncated {} element", el.name)))?;
            let tok: Vec<&str> = l.split_whitespace().collect();
            match el.name.as_str() {
                "vertex" => {
                    if tok.len() < el.props.len() {
                        return Err(err(line, format!("expected {} values", el.props.len())));
                    }
                    let mut c = [0.0; 3];
                    for (k, ix) in xyz.iter().enumerate() {
                        let ix = ix.ok_or_else(|| err(line, "vertex lacks x, y or z".into()))?;
                        c[k] = tok[ix]
                            .parse()
                            .map_err(|_| err(line, format!("bad coordinate {:?}", tok[ix])))?;
                    }
                    points.push(Vec3::new(c[0], c[1], c[2]));
                }
                "face" => {
                    let n: usize = tok
                        .first()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| err(line, "bad face corner count".into()))?;
                    if n < 3 || tok.len() < n + 1 {
                        return Err(err(line, format!("face needs at least 3 indices, got {n}")));
                    }
                    let mut idx = Vec::with_capacity(n);
                    for s in &tok[1..=n] {
                        idx.push(s.parse::<u32>().map_err(|_| err(line, format!("bad index {s:?}")))?);
                    }
                    let f = faces.get_or_insert_with(Vec::new);
                    for k in 1..n - 1 {
                        f.push([idx[0], idx[k], idx[k + 1]]);
                    }
                }
                _ => {}
            }
        }
    }

    if points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
        return Err(Error::Format(format!("{path}: non-finite vertex coordinates")));
    }
    let mesh = match faces {
        Some(f) => {
            let m = TriangleMesh::new(points.clone(), f);
            if !m.indices_in_range() {
                return Err(Error::Format(format!("{path}: face index out of range")));
            }
            Some(m)
        }
        None => None,
    };
    Ok((PointCloud::new(points), mesh))
}

pub fn read_ply(path: &Path) -> Result<(PointCloud, Option<TriangleMesh>)> {
    let bytes = read_bytes(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|_| Error::Format(format!("{}: PLY is not UTF-8", path.display())))?;
    parse_ply(text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_round_trip() {
        let m = TriangleMesh::new(
            vec![Vec3::new(0.0, 0.0, 0.125), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, -3.5)],
            vec![[0, 1, 2]],
        );
        let text = to_ascii(&m);
        let (cloud, back) = parse_ply(&text, "mem").unwrap();
        assert_eq!(back.unwrap(), m);
        assert_eq!(cloud.points, m.vertices);
    }

    #[test]
    fn cloud_only_and_quads() {
        let c = PointCloud::new(vec![Vec3::new(1.0, 2.0, 3.0)]);
        let (back, mesh) = parse_ply(&cloud_to_ascii(&c), "mem").unwrap();
        assert_eq!(back, c);
        assert!(mesh.is_none());

        let text = "ply\nformat ascii 1.0\nelement vertex 4\nproperty float x\nproperty float y\nproperty float z\nproperty uchar red\n\
                    element face 1\nproperty list uchar int vertex_indices\nend_header\n\
                    0 0 0 9\n1 0 0 9\n1 1 0 9\n0 1 0 9\n4 0 1 2 3\n";
        let (_, mesh) = parse_ply(text, "mem").unwrap();
        assert_eq!(mesh.unwrap().triangles, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "ply\nformat ascii 1.0\nelement vertex 1\nproperty double x\nproperty double y\nproperty double z\nend_header\n0 zz 0\n";
        match parse_ply(text, "f.ply") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 8),
            other => panic!("{other:?}"),
        }
        assert!(parse_ply("ply\nformat binary_little_endian 1.0\nend_header\n", "f").is_err());
    }
}
