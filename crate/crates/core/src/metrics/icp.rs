//! Point-to-point ICP with the closed-form Procrustes fit.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::{MeshIndex, PointIndex};
use crate::error::{Error, Result};
use crate::mesh::{PointCloud, RigidTransform, TriangleMesh};
use crate::quaternion::Quaternion;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IcpParams {
    pub max_iters: usize,
    /// Stop once the RMS residual improves by less than this (mm).
    pub tol: f64,
}

impl Default for IcpParams {
    fn default() -> Self {
        Self {
            max_iters: 50,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum IcpTarget<'a> {
    Cloud(&'a PointCloud),
    Mesh(&'a TriangleMesh),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcpResult {
    /// Maps source coordinates into the target frame.
    pub transform: RigidTransform,
    /// Final RMS correspondence distance.
    pub residual: f64,
    pub iterations: usize,
    /// RMS before the first fit followed by one entry per accepted iteration.
    pub history: Vec<f64>,
}

enum Matcher<'a> {
    Cloud(PointIndex<'a>),
    Mesh(MeshIndex<'a>),
}

impl Matcher<'_> {
    /// Closest target point and the item it came from.
    fn closest(&self, p: &Vec3, hint: Option<usize>) -> (Vec3, usize) {
        match self {
            Matcher::Cloud(i) => {
                let (k, q, _) = i.nearest_with_hint(p, hint);
                (q, k)
            }
            Matcher::Mesh(i) => {
                let hit = i.closest_with_hint(p, hint);
                (hit.point, hit.triangle)
            }
        }
    }

    fn match_all(&self, points: &[Vec3], hints: &[usize]) -> (Vec<Vec3>, Vec<usize>) {
        points
            .iter()
            .enumerate()
            .map(|(k, p)| self.closest(p, hints.get(k).copied()))
            .unzip()
    }
}

fn check_source(source: &PointCloud) -> Result<()> {
    if source.len() < 3 {
        return Err(Error::Degenerate("ICP needs at least 3 source points".into()));
    }
    if source.points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
        return Err(Error::InvalidInput("ICP source has non-finite coordinates".into()));
    }
    let p0 = source.points[0];
    let scale = source.points.iter().map(|p| (p - p0).norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::Degenerate("ICP source points are coincident".into()));
    }
    let far = *source
        .points
        .iter()
        .max_by(|a, b| (*a - p0).norm().total_cmp(&(*b - p0).norm()))
        .expect("non-empty");
    let dir = (far - p0) / scale;
    let spread = source
        .points
        .iter()
        .map(|p| (p - p0).cross(&dir).norm())
        .fold(0.0, f64::max);
    if spread <= 1e-9 * scale {
        return Err(Error::Degenerate("ICP source points are collinear".into()));
    }
    Ok(())
}

/// Least-squares rigid motion taking `src[i]` onto `dst[i]`.
pub fn procrustes(src: &[Vec3], dst: &[Vec3]) -> RigidTransform {
    let n = src.len() as f64;
    let cs = src.iter().sum::<Vec3>() / n;
    let cd = dst.iter().sum::<Vec3>() / n;
    let mut h = Matrix3::zeros();
    for (s, d) in src.iter().zip(dst) {
        h += (s - cs) * (d - cd).transpose();
    }
    let svd = h.svd(true, true);
    let u = svd.u.expect("u requested");
    let v = svd.v_t.expect("v_t requested").transpose();
    let mut fix = Matrix3::identity();
    if (v * u.transpose()).determinant() < 0.0 {
        fix[(2, 2)] = -1.0;
    }
    let r = v * fix * u.transpose();
    let q = Quaternion::from_rotation_matrix(&r);
    let rotation = if q.w < 0.0 { -q } else { q };
    RigidTransform::new(rotation, cd - r * cs)
}

fn rms(a: &[Vec3], b: &[Vec3]) -> f64 {
    (a.iter().zip(b).map(|(p, q)| (p - q).norm_squared()).sum::<f64>() / a.len() as f64).sqrt()
}

pub fn icp_align(source: &PointCloud, target: IcpTarget, params: &IcpParams) -> Result<IcpResult> {
    check_source(source)?;
    let matcher = match target {
        IcpTarget::Cloud(c) => Matcher::Cloud(PointIndex::new(c)?),
        IcpTarget::Mesh(m) => Matcher::Mesh(MeshIndex::new(m)?),
    };

    let mut transform = RigidTransform::IDENTITY;
    let (mut corr, mut items) = matcher.match_all(&source.points, &[]);
    let mut residual = rms(&source.points, &corr);
    let mut history = vec![residual];
    let mut iterations = 0;

    while iterations < params.max_iters {
        iterations += 1;
        let candidate = procrustes(&source.points, &corr);
        let cand_moved: Vec<Vec3> = source.points.iter().map(|p| candidate.apply(*p)).collect();
        let (cand_corr, cand_items) = matcher.match_all(&cand_moved, &items);
        let cand_res = rms(&cand_moved, &cand_corr);
        if !cand_res.is_finite() {
            return Err(Error::Degenerate("ICP residual is not finite".into()));
        }
        // In exact arithmetic each step cannot increase the residual; a
        // rounding-level increase means we are at the fixed point.
        if cand_res > residual {
            break;
        }
        let improvement = residual - cand_res;
        transform = candidate;
        corr = cand_corr;
        items = cand_items;
        residual = cand_res;
        history.push(residual);
        if improvement < params.tol {
            break;
        }
    }
    Ok(IcpResult {
        transform,
        residual,
        iterations,
        history,
    })
}
