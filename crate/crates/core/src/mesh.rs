//! Point clouds and triangle meshes shared by reconstruction, I/O and metrics.

use crate::quaternion::{rotate_vector, Quaternion};
use crate::Vec3;

/// Faces with twice-area below this are considered degenerate.
pub const MIN_TRIANGLE_AREA: f64 = 1e-12;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn transformed(&self, t: &RigidTransform) -> PointCloud {
        PointCloud::new(self.points.iter().map(|p| t.apply(*p)).collect())
    }
}

impl From<Vec<Vec3>> for PointCloud {
    fn from(points: Vec<Vec3>) -> Self {
        Self { points }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Self {
        Self { vertices, triangles }
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle(&self, i: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[i];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    /// Unit normal following the counter-clockwise winding.
    pub fn face_normal(&self, i: usize) -> Vec3 {
        let [a, b, c] = self.triangle(i);
        (b - a).cross(&(c - a)).normalize()
    }

    pub fn indices_in_range(&self) -> bool {
        let n = self.vertices.len() as u32;
        self.triangles.iter().all(|t| t.iter().all(|&i| i < n))
    }

    pub fn vertex_cloud(&self) -> PointCloud {
        PointCloud::new(self.vertices.clone())
    }

    pub fn transformed(&self, t: &RigidTransform) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.iter().map(|p| t.apply(*p)).collect(),
            triangles: self.triangles.clone(),
        }
    }

    /// Axis-aligned XY bounds of the vertices: `(min, max)`.
    pub fn xy_bounds(&self) -> Option<([f64; 2], [f64; 2])> {
        let first = self.vertices.first()?;
        let mut lo = [first.x, first.y];
        let mut hi = lo;
        for v in &self.vertices {
            lo = [lo[0].min(v.x), lo[1].min(v.y)];
            hi = [hi[0].max(v.x), hi[1].max(v.y)];
        }
        Some((lo, hi))
    }
}

/// Rotation followed by translation: `p ↦ R p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Quaternion,
    pub translation: Vec3,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl RigidTransform {
    pub const IDENTITY: RigidTransform = RigidTransform {
        rotation: Quaternion::IDENTITY,
        translation: Vec3::new(0.0, 0.0, 0.0),
    };

    pub fn new(rotation: Quaternion, translation: Vec3) -> Self {
        Self {
            rotation: rotation.normalize(),
            translation,
        }
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        rotate_vector(self.rotation, p) + self.translation
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn compose(&self, first: &RigidTransform) -> RigidTransform {
        RigidTransform::new(
            self.rotation * first.rotation,
            rotate_vector(self.rotation, first.translation) + self.translation,
        )
    }

    pub fn inverse(&self) -> RigidTransform {
        let inv = self.rotation.conjugate();
        RigidTransform::new(inv, -rotate_vector(inv, self.translation))
    }
}
