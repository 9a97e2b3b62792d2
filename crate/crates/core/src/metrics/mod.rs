//! Reconstruction error metrics: Hausdorff, cloud-to-cloud, signed and
//! unsigned cloud-to-mesh distances, and ICP alignment.

pub mod icp;
pub mod octree;
pub mod triangle;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{PointCloud, TriangleMesh};
use crate::Vec3;

pub use icp::{icp_align, IcpParams, IcpResult, IcpTarget};
pub use octree::{Octree, DEFAULT_LEAF_CAPACITY};
pub use triangle::closest_point_on_triangle;

/// Octree over a point set.
#[derive(Debug, Clone)]
pub struct PointIndex<'a> {
    points: &'a [Vec3],
    tree: Octree,
}

impl<'a> PointIndex<'a> {
    pub fn new(cloud: &'a PointCloud) -> Result<Self> {
        Self::with_capacity(cloud, DEFAULT_LEAF_CAPACITY)
    }

    pub fn with_capacity(cloud: &'a PointCloud, leaf_capacity: usize) -> Result<Self> {
        check_cloud(cloud, "point cloud")?;
        let boxes: Vec<_> = cloud.points.iter().map(|p| (*p, *p)).collect();
        Ok(Self {
            points: &cloud.points,
            tree: Octree::build(&boxes, leaf_capacity),
        })
    }

    /// Exact nearest point: `(index, point, distance)`.
    pub fn nearest(&self, a: &Vec3) -> (usize, Vec3, f64) {
        self.nearest_with_hint(a, None)
    }

    /// Same result as [`PointIndex::nearest`]; a good `hint` (e.g. the
    /// previous match) only makes the search faster.
    pub fn nearest_with_hint(&self, a: &Vec3, hint: Option<usize>) -> (usize, Vec3, f64) {
        let (i, d) = self
            .tree
            .nearest_with_hint(a, hint, |i| (a - self.points[i]).norm())
            .expect("index is non-empty");
        (i, self.points[i], d)
    }
}

/// Closest point on a mesh with the normal of the face it lies on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshHit {
    pub point: Vec3,
    pub normal: Vec3,
    pub distance: f64,
    pub triangle: usize,
}

/// Octree over the triangles of a mesh.
#[derive(Debug, Clone)]
pub struct MeshIndex<'a> {
    mesh: &'a TriangleMesh,
    normals: Vec<Vec3>,
    tree: Octree,
}

impl<'a> MeshIndex<'a> {
    pub fn new(mesh: &'a TriangleMesh) -> Result<Self> {
        Self::with_capacity(mesh, DEFAULT_LEAF_CAPACITY)
    }

    pub fn with_capacity(mesh: &'a TriangleMesh, leaf_capacity: usize) -> Result<Self> {
        if mesh.is_empty() {
            return Err(Error::Empty("mesh"));
        }
        if !mesh.indices_in_range() {
            return Err(Error::Format("mesh triangle index out of range".into()));
        }
        if mesh.vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidInput("mesh has non-finite vertices".into()));
        }
        let mut normals = Vec::with_capacity(mesh.triangles.len());
        let mut boxes = Vec::with_capacity(mesh.triangles.len());
        for i in 0..mesh.triangles.len() {
            let [a, b, c] = mesh.triangle(i);
            let n = (b - a).cross(&(c - a));
            if n.norm() <= 0.0 {
                return Err(Error::Degenerate(format!("triangle {i} has zero area")));
            }
            normals.push(n.normalize());
            boxes.push((a.inf(&b).inf(&c), a.sup(&b).sup(&c)));
        }
        Ok(Self {
            mesh,
            normals,
            tree: Octree::build(&boxes, leaf_capacity),
        })
    }

    pub fn mesh(&self) -> &TriangleMesh {
        self.mesh
    }

    pub fn closest(&self, a: &Vec3) -> MeshHit {
        self.closest_with_hint(a, None)
    }

    /// Same result as [`MeshIndex::closest`], searched from `hint` first.
    pub fn closest_with_hint(&self, a: &Vec3, hint: Option<usize>) -> MeshHit {
        let (i, d) = self
            .tree
            .nearest_with_hint(a, hint, |i| {
                let [p, q, r] = self.mesh.triangle(i);
                (a - closest_point_on_triangle(a, &p, &q, &r)).norm()
            })
            .expect("index is non-empty");
        let [p, q, r] = self.mesh.triangle(i);
        MeshHit {
            point: closest_point_on_triangle(a, &p, &q, &r),
            normal: self.normals[i],
            distance: d,
            triangle: i,
        }
    }
}

fn check_cloud(cloud: &PointCloud, what: &'static str) -> Result<()> {
    if cloud.is_empty() {
        return Err(Error::Empty(what));
    }
    if cloud.points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
        return Err(Error::InvalidInput(format!("{what} has non-finite coordinates")));
    }
    Ok(())
}

/// `(mean, population std)`.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn nearest_in_cloud(index: &PointIndex, a: &Vec3) -> (Vec3, f64) {
    let (_, b, d) = index.nearest(a);
    (b, d)
}

pub fn closest_point_on_mesh(index: &MeshIndex, a: &Vec3) -> MeshHit {
    index.closest(a)
}

/// Per-point nearest-neighbour distances from `a` into `b`.
pub fn nearest_distances(a: &PointCloud, b: &PointCloud) -> Result<Vec<f64>> {
    check_cloud(a, "source cloud")?;
    let index = PointIndex::new(b)?;
    Ok(a.points.iter().map(|p| index.nearest(p).2).collect())
}

/// Directed distance `max_a min_b |a - b|`.
pub fn directed_hausdorff(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    Ok(nearest_distances(a, b)?.into_iter().fold(0.0, f64::max))
}

pub fn hausdorff(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    Ok(directed_hausdorff(a, b)?.max(directed_hausdorff(b, a)?))
}

/// Mean and population std of nearest-neighbour distances from `a` to `b`.
pub fn cloud_to_cloud(a: &PointCloud, b: &PointCloud) -> Result<(f64, f64)> {
    Ok(mean_std(&nearest_distances(a, b)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CloudToMesh {
    pub scm_mean_abs: f64,
    pub scm_std: f64,
    pub ucm_mean: f64,
    pub ucm_std: f64,
}

/// Signed distances of each point to the mesh, positive on the normal side.
pub fn signed_distances(a: &PointCloud, mesh: &MeshIndex) -> Result<Vec<f64>> {
    check_cloud(a, "point cloud")?;
    Ok(a.points
        .iter()
        .map(|p| {
            let hit = mesh.closest(p);
            let side = (p - hit.point).dot(&hit.normal);
            if hit.distance == 0.0 || side == 0.0 {
                0.0
            } else {
                hit.distance * side.signum()
            }
        })
        .collect())
}

pub fn cloud_to_mesh(a: &PointCloud, mesh: &TriangleMesh) -> Result<CloudToMesh> {
    let index = MeshIndex::new(mesh)?;
    cloud_to_mesh_indexed(a, &index)
}

pub fn cloud_to_mesh_indexed(a: &PointCloud, mesh: &MeshIndex) -> Result<CloudToMesh> {
    let s = signed_distances(a, mesh)?;
    let (sm, ss) = mean_std(&s);
    let abs: Vec<f64> = s.iter().map(|v| v.abs()).collect();
    let (um, us) = mean_std(&abs);
    Ok(CloudToMesh {
        scm_mean_abs: sm.abs(),
        scm_std: ss,
        ucm_mean: um,
        ucm_std: us,
    })
}

/// Evaluation summary, all distances in millimetres.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsReport {
    pub ucm_mean: f64,
    pub ucm_std: f64,
    pub scm: f64,
    pub scm_std: f64,
    pub cc_mean: f64,
    pub cc_std: f64,
    pub icp_residual: f64,
    pub icp_iters: usize,
    pub reference_points: usize,
    pub reconstruction_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaluateOptions {
    pub icp: IcpParams,
    pub align: bool,
    /// After the cloud-to-cloud pass, align the cropped reference onto the
    /// reconstruction surface. This minimizes the same point-to-mesh
    /// distances the CM statistics report.
    pub refine_to_mesh: bool,
    /// Keep only reference points inside the aligned reconstruction's XY box.
    pub crop_to_footprint: bool,
}

impl Default for EvaluateOptions {
    fn default() -> Self {
        Self {
            icp: IcpParams::default(),
            align: true,
            refine_to_mesh: true,
            crop_to_footprint: true,
        }
    }
}

/// Reference points inside the XY bounds of `mesh`, with a small tolerance.
pub fn crop_to_footprint(cloud: &PointCloud, mesh: &TriangleMesh) -> PointCloud {
    let Some((lo, hi)) = mesh.xy_bounds() else {
        return PointCloud::default();
    };
    let scale = lo.iter().chain(hi.iter()).fold(1.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-9 * scale;
    PointCloud::new(
        cloud
            .points
            .iter()
            .filter(|p| {
                p.x >= lo[0] - tol && p.x <= hi[0] + tol && p.y >= lo[1] - tol && p.y <= hi[1] + tol
            })
            .copied()
            .collect(),
    )
}

/// Align the reconstruction vertices onto the reference cloud, then measure
/// CC from the reconstruction vertices to the reference cloud and CM from the
/// reference cloud to the reconstruction mesh.
pub fn evaluate(reconstruction: &TriangleMesh, reference: &PointCloud, opts: &EvaluateOptions) -> Result<MetricsReport> {
    if reconstruction.is_empty() {
        return Err(Error::Empty("reconstruction mesh"));
    }
    let crop = |mesh: &TriangleMesh| {
        if opts.crop_to_footprint {
            crop_to_footprint(reference, mesh)
        } else {
            reference.clone()
        }
    };
    let mut aligned = reconstruction.clone();
    let mut icp_residual = 0.0;
    let mut icp_iters = 0;
    if opts.align {
        let coarse = icp_align(&reconstruction.vertex_cloud(), IcpTarget::Cloud(reference), &opts.icp)?;
        aligned = reconstruction.transformed(&coarse.transform);
        icp_residual = coarse.residual;
        icp_iters = coarse.iterations;
        if opts.refine_to_mesh {
            let inside = crop(&aligned);
            if inside.len() >= 3 {
                let fine = icp_align(&inside, IcpTarget::Mesh(&aligned), &opts.icp)?;
                aligned = aligned.transformed(&fine.transform.inverse());
                icp_residual = fine.residual;
                icp_iters += fine.iterations;
            }
        }
    }

    let ref_cloud = crop(&aligned);
    if ref_cloud.is_empty() {
        return Err(Error::Degenerate("reference does not overlap the reconstruction".into()));
    }

    let aligned_cloud = aligned.vertex_cloud();
    let (cc_mean, cc_std) = cloud_to_cloud(&aligned_cloud, &ref_cloud)?;
    let cm = cloud_to_mesh(&ref_cloud, &aligned)?;
    Ok(MetricsReport {
        ucm_mean: cm.ucm_mean,
        ucm_std: cm.ucm_std,
        scm: cm.scm_mean_abs,
        scm_std: cm.scm_std,
        cc_mean,
        cc_std,
        icp_residual,
        icp_iters,
        reference_points: ref_cloud.len(),
        reconstruction_points: aligned_cloud.len(),
    })
}
