//! Quaternion algebra and the accelerometer-seeded initial orientation.
//!
//! Storage is scalar-first `[w, x, y, z]`. The rotation convention used
//! throughout the crate is the active one: [`rotate_vector`] computes
//! `q ⊗ v ⊗ q*`, so an orientation estimate `q` carries sensor-frame vectors
//! into the base frame and `q*` carries base-frame vectors into the sensor.
//! Under that convention [`quat_from_accel`] returns the quaternion that
//! carries the measured gravity direction onto `g = [0, 0, 1]`.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::Vec3;

/// Base-frame gravity direction.
pub const GRAVITY_UP: Vec3 = Vec3::new(0.0, 0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Default for Quaternion {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);
    pub const ZERO: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 0.0);

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    /// Pure quaternion `[0, v]`.
    pub fn pure(v: Vec3) -> Self {
        Self::new(0.0, v.x, v.y, v.z)
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn vector(self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        let axis = axis.normalize();
        let (s, c) = (0.5 * angle).sin_cos();
        Self::new(c, axis.x * s, axis.y * s, axis.z * s)
    }

    pub fn norm_squared(self) -> f64 {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn normalize(self) -> Self {
        self * (1.0 / self.norm())
    }

    pub fn conjugate(self) -> Self {
        conjugate(self)
    }

    pub fn dot(self, other: Self) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn is_finite(self) -> bool {
        self.w.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Rotation angle in `[0, π]` between two unit quaternions, treating `q`
    /// and `-q` as the same rotation.
    pub fn angle_to(self, other: Self) -> f64 {
        let d = self.dot(other).abs().min(1.0);
        2.0 * d.acos()
    }

    /// Rotation matrix of a unit quaternion, for the active convention.
    pub fn to_rotation_matrix(self) -> nalgebra::Matrix3<f64> {
        let Quaternion { w, x, y, z } = self;
        nalgebra::Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }

    /// Unit quaternion from a proper rotation matrix (Shepperd's method).
    pub fn from_rotation_matrix(m: &nalgebra::Matrix3<f64>) -> Self {
        let trace = m[(0, 0)] + m[(1, 1)] + m[(2, 2)];
        let q = if trace > 0.0 {
            let s = (trace + 1.0).sqrt() * 2.0;
            Self::new(
                0.25 * s,
                (m[(2, 1)] - m[(1, 2)]) / s,
                (m[(0, 2)] - m[(2, 0)]) / s,
                (m[(1, 0)] - m[(0, 1)]) / s,
            )
        } else if m[(0, 0)] > m[(1, 1)] && m[(0, 0)] > m[(2, 2)] {
            let s = (1.0 + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]).sqrt() * 2.0;
            Self::new(
                (m[(2, 1)] - m[(1, 2)]) / s,
                0.25 * s,
                (m[(0, 1)] + m[(1, 0)]) / s,
                (m[(0, 2)] + m[(2, 0)]) / s,
            )
        } else if m[(1, 1)] > m[(2, 2)] {
            let s = (1.0 + m[(1, 1)] - m[(0, 0)] - m[(2, 2)]).sqrt() * 2.0;
            Self::new(
                (m[(0, 2)] - m[(2, 0)]) / s,
                (m[(0, 1)] + m[(1, 0)]) / s,
                0.25 * s,
                (m[(1, 2)] + m[(2, 1)]) / s,
            )
        } else {
            let s = (1.0 + m[(2, 2)] - m[(0, 0)] - m[(1, 1)]).sqrt() * 2.0;
            Self::new(
                (m[(1, 0)] - m[(0, 1)]) / s,
                (m[(0, 2)] + m[(2, 0)]) / s,
                (m[(1, 2)] + m[(2, 1)]) / s,
                0.25 * s,
            )
        };
        let q = q.normalize();
        if q.w < 0.0 {
            -q
        } else {
            q
        }
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;

    fn mul(self, rhs: Quaternion) -> Quaternion {
        hamilton_product(self, rhs)
    }
}

impl Mul<f64> for Quaternion {
    type Output = Quaternion;

    fn mul(self, s: f64) -> Quaternion {
        Quaternion::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }
}

impl Add for Quaternion {
    type Output = Quaternion;

    fn add(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.w + o.w, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;

    fn sub(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.w - o.w, self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;

    fn neg(self) -> Quaternion {
        Quaternion::new(-self.w, -self.x, -self.y, -self.z)
    }
}

pub fn hamilton_product(a: Quaternion, b: Quaternion) -> Quaternion {
    Quaternion::new(
        a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
        a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
        a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
        a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
    )
}

pub fn conjugate(q: Quaternion) -> Quaternion {
    Quaternion::new(q.w, -q.x, -q.y, -q.z)
}

/// `q ⊗ [0, v] ⊗ q*`, returned as a vector.
///
/// Uses the expanded two-cross-product form, which is exact for unit `q`.
pub fn rotate_vector(q: Quaternion, v: Vec3) -> Vec3 {
    let u = q.vector();
    let t = 2.0 * u.cross(&v);
    v + q.w * t + u.cross(&t)
}

/// Like [`rotate_vector`] but rejects non-finite input and non-unit `q`.
pub fn try_rotate_vector(q: Quaternion, v: Vec3) -> Result<Vec3> {
    if !q.is_finite() || !v.iter().all(|c| c.is_finite()) {
        return Err(Error::InvalidInput("non-finite rotation input".into()));
    }
    if (q.norm() - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidInput(format!(
            "rotation quaternion is not unit (norm {})",
            q.norm()
        )));
    }
    Ok(rotate_vector(q, v))
}

/// Initial orientation from a normalized accelerometer reading.
///
/// Builds `[g·a, a×g]`, which encodes twice the rotation between `a` and
/// `g`, then halves it by adding the zero rotation and normalizing. The
/// result carries `a` onto `g`: `rotate_vector(q, a) == g`.
///
/// When `a` is (anti)parallel to `-g` the half-way sum vanishes; a fixed π
/// rotation about the X axis is returned instead.
pub fn quat_from_accel(a_s: Vec3) -> Quaternion {
    if a_s.dot(&GRAVITY_UP) <= -1.0 + 1e-9 {
        return Quaternion::new(0.0, 1.0, 0.0, 0.0);
    }
    let v = a_s.cross(&GRAVITY_UP);
    let doubled = Quaternion::new(GRAVITY_UP.dot(&a_s), v.x, v.y, v.z);
    (doubled + Quaternion::IDENTITY).normalize()
}

/// Rotation of `theta_z` radians about the base Z axis.
pub fn quat_z_rotation(theta_z: f64) -> Quaternion {
    let (s, c) = (0.5 * theta_z).sin_cos();
    Quaternion::new(c, 0.0, 0.0, s)
}

/// `q_rot ⊗ q_g`, renormalized.
pub fn compose_initial_orientation(q_rot: Quaternion, q_g_as: Quaternion) -> Quaternion {
    hamilton_product(q_rot, q_g_as).normalize()
}
