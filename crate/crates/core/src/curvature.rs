//! Control point between two contacts from their tangent planes.
//!
//! Each contact's tangent plane is used to project the *other* contact; the
//! two resulting tangent lines are generally skew, and the midpoint of their
//! common perpendicular, projected onto the vertical plane through both
//! contacts, is the control point of the quadratic span joining them.

use crate::error::{Error, Result};
use crate::Vec3;

/// Step fraction used by the out-of-bounds adjustment loop.
pub const DEFAULT_ADJUST_DELTA: f64 = 0.0001;

const BASE_UP: Vec3 = Vec3::new(0.0, 0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub origin: Vec3,
    pub normal: Vec3,
}

impl Plane {
    /// Normalizes `normal`; rejects a zero vector.
    pub fn new(origin: Vec3, normal: Vec3) -> Result<Self> {
        let n = normal.norm();
        if !(n > 1e-12) || !n.is_finite() {
            return Err(Error::Degenerate(format!("plane normal {normal:?}")));
        }
        Ok(Self {
            origin,
            normal: normal / n,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line3 {
    pub origin: Vec3,
    pub direction: Vec3,
}

impl Line3 {
    pub fn new(origin: Vec3, direction: Vec3) -> Result<Self> {
        if !(direction.norm() > 1e-12) {
            return Err(Error::Degenerate(format!("line direction {direction:?}")));
        }
        Ok(Self { origin, direction })
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlPoint {
    pub position: Vec3,
    /// Tangent lines were parallel and the segment midpoint was used.
    pub degenerate: bool,
    /// The out-of-bounds adjustment moved the point.
    pub adjusted: bool,
}

/// Closest points between two lines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewSolution {
    pub m: Vec3,
    pub n: Vec3,
    pub t1: f64,
    pub t2: f64,
    pub parallel: bool,
}

pub fn project_point_to_plane(p: Vec3, plane: &Plane) -> Vec3 {
    p - plane.normal * (p - plane.origin).dot(&plane.normal)
}

/// Solves `(m − n)·l1 = 0`, `(m − n)·l2 = 0` for `m = L1(t1)`, `n = L2(t2)`.
///
/// Parallel lines (`|l1 × l2| < 1e-9·|l1||l2|`) take `m` at L1's origin and
/// `n` at its perpendicular foot on L2.
pub fn skew_line_closest_points(l1: &Line3, l2: &Line3) -> SkewSolution {
    let (d1, d2) = (l1.direction, l2.direction);
    let w0 = l1.origin - l2.origin;
    let a = d1.dot(&d1);
    let b = d1.dot(&d2);
    let c = d2.dot(&d2);
    let d = d1.dot(&w0);
    let e = d2.dot(&w0);

    if d1.cross(&d2).norm() < 1e-9 * a.sqrt() * c.sqrt() {
        let t2 = e / c;
        return SkewSolution {
            m: l1.origin,
            n: l2.at(t2),
            t1: 0.0,
            t2,
            parallel: true,
        };
    }

    let denom = a * c - b * b;
    let t1 = (b * e - c * d) / denom;
    let t2 = (a * e - b * d) / denom;
    SkewSolution {
        m: l1.at(t1),
        n: l2.at(t2),
        t1,
        t2,
        parallel: false,
    }
}

/// Vertical plane through `p1` containing `p2 − p1` and the base Z axis.
pub fn vertical_plane(p1: Vec3, p2: Vec3) -> Result<Plane> {
    let chord = p2 - p1;
    let scale = p1.amax().max(p2.amax()).max(1.0);
    let normal = chord.cross(&BASE_UP);
    if normal.norm() <= 1e-9 * scale {
        return Err(Error::Degenerate(
            "contacts are vertically aligned; vertical plane undefined".into(),
        ));
    }
    Plane::new(p1, normal)
}

/// Control point of the span `p1 → p2` with unit normals `n1`, `n2`.
pub fn control_point(p1: Vec3, n1: Vec3, p2: Vec3, n2: Vec3) -> Result<ControlPoint> {
    control_point_with_delta(p1, n1, p2, n2, DEFAULT_ADJUST_DELTA)
}

pub fn control_point_with_delta(p1: Vec3, n1: Vec3, p2: Vec3, n2: Vec3, delta: f64) -> Result<ControlPoint> {
    let raw = unadjusted_control_point(p1, n1, p2, n2)?;
    let position = adjust_control_point(p1, p2, raw.position, delta);
    Ok(ControlPoint {
        position,
        degenerate: raw.degenerate,
        adjusted: position != raw.position,
    })
}

/// The construction up to and including the projection onto the vertical
/// plane, before the out-of-bounds adjustment.
pub fn unadjusted_control_point(p1: Vec3, n1: Vec3, p2: Vec3, n2: Vec3) -> Result<ControlPoint> {
    let scale = p1.amax().max(p2.amax()).max(1.0);
    if (p2 - p1).norm() <= 1e-9 * scale {
        return Err(Error::Degenerate("coincident contact points".into()));
    }
    let v_plane = vertical_plane(p1, p2)?;
    let plane1 = Plane::new(p1, n1)?;
    let plane2 = Plane::new(p2, n2)?;

    let p1_on_2 = project_point_to_plane(p1, &plane2);
    let p2_on_1 = project_point_to_plane(p2, &plane1);
    let midpoint = ControlPoint {
        position: (p1 + p2) * 0.5,
        degenerate: true,
        adjusted: false,
    };

    // A contact lying along the other's normal collapses its tangent line.
    let (Ok(line1), Ok(line2)) = (Line3::new(p1, p2_on_1 - p1), Line3::new(p2, p1_on_2 - p2)) else {
        return Ok(midpoint);
    };
    let sol = skew_line_closest_points(&line1, &line2);
    if sol.parallel {
        return Ok(midpoint);
    }
    Ok(ControlPoint {
        position: project_point_to_plane((sol.m + sol.n) * 0.5, &v_plane),
        degenerate: false,
        adjusted: false,
    })
}

/// Step `cp` towards its farther contact in increments of
/// `delta · (p_far − cp)` until it is no farther than `|p1 − p2|` from both.
pub fn adjust_control_point(p1: Vec3, p2: Vec3, cp: Vec3, delta: f64) -> Vec3 {
    let span = (p1 - p2).norm();
    let l_aux = if (cp - p1).norm() >= (cp - p2).norm() {
        p1 - cp
    } else {
        p2 - cp
    };
    if l_aux.norm() < span {
        return cp;
    }
    let step = l_aux * delta;
    let out_of_bounds = |c: &Vec3| (c - p1).norm() > span || (c - p2).norm() > span;
    // Reaching the far contact after 1/delta steps always satisfies both
    // bounds up to rounding; the cap only guards against that rounding.
    let max_steps = (2.0 / delta).ceil() as usize + 2;
    let mut cp_new = cp;
    let mut steps = 0usize;
    while out_of_bounds(&cp_new) && steps < max_steps {
        cp_new += step;
        steps += 1;
    }
    cp_new
}

pub fn central_control_point(cp1: Vec3, cp2: Vec3, cp3: Vec3, cp4: Vec3) -> Vec3 {
    (cp1 + cp2 + cp3 + cp4) * 0.25
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn projection_examples() {
        let z0 = Plane::new(Vec3::zeros(), Vec3::z()).unwrap();
        assert_eq!(project_point_to_plane(Vec3::new(3.0, 4.0, 0.0), &z0), Vec3::new(3.0, 4.0, 0.0));
        assert_eq!(project_point_to_plane(Vec3::new(0.0, 0.0, 5.0), &z0), Vec3::zeros());
        let diag = Plane::new(Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0)).unwrap();
        assert_abs_diff_eq!(
            project_point_to_plane(Vec3::new(1.0, 2.0, 3.0), &diag),
            Vec3::new(-1.0, 0.0, 1.0),
            epsilon = 1e-12
        );
        assert!(Plane::new(Vec3::zeros(), Vec3::zeros()).is_err());
    }

    #[test]
    fn skew_examples() {
        let l1 = Line3::new(Vec3::zeros(), Vec3::x()).unwrap();
        let l2 = Line3::new(Vec3::new(0.0, 1.0, 1.0), Vec3::y()).unwrap();
        let s = skew_line_closest_points(&l1, &l2);
        assert!(!s.parallel);
        assert_abs_diff_eq!(s.m, Vec3::zeros(), epsilon = 1e-12);
        assert_abs_diff_eq!(s.n, Vec3::new(0.0, 0.0, 1.0), epsilon = 1e-12);
        assert_abs_diff_eq!(s.t2, -1.0, epsilon = 1e-12);

        // Intersecting at (2, 2, 0).
        let a = Line3::new(Vec3::zeros(), Vec3::new(1.0, 1.0, 0.0)).unwrap();
        let b = Line3::new(Vec3::new(4.0, 0.0, 0.0), Vec3::new(-1.0, 1.0, 0.0)).unwrap();
        let s = skew_line_closest_points(&a, &b);
        assert_abs_diff_eq!(s.m, Vec3::new(2.0, 2.0, 0.0), epsilon = 1e-12);
        assert_abs_diff_eq!(s.n, Vec3::new(2.0, 2.0, 0.0), epsilon = 1e-12);

        let c = Line3::new(Vec3::new(0.0, 3.0, 4.0), Vec3::new(-2.0, 0.0, 0.0)).unwrap();
        let s = skew_line_closest_points(&l1, &c);
        assert!(s.parallel);
        assert_abs_diff_eq!((s.m - s.n).norm(), 5.0, epsilon = 1e-12);
    }

    #[test]
    fn flat_contacts_give_midpoint() {
        let cp = control_point(Vec3::zeros(), Vec3::z(), Vec3::new(20.0, 0.0, 0.0), Vec3::z()).unwrap();
        assert_eq!(cp.position, Vec3::new(10.0, 0.0, 0.0));
        assert!(cp.degenerate);
        assert!(!cp.adjusted);
    }

    fn ridge(alpha_deg: f64) -> ControlPoint {
        let a = alpha_deg.to_radians();
        control_point(
            Vec3::zeros(),
            Vec3::new(-a.sin(), 0.0, a.cos()),
            Vec3::new(20.0, 0.0, 0.0),
            Vec3::new(a.sin(), 0.0, a.cos()),
        )
        .unwrap()
    }

    #[test]
    fn ridge_examples() {
        for alpha in [15.0f64, 30.0, 45.0] {
            let cp = ridge(alpha);
            let expect = Vec3::new(10.0, 0.0, 10.0 * alpha.to_radians().tan());
            assert!((cp.position - expect).amax() <= 1e-9, "{alpha}: {:?}", cp.position);
            assert!(!cp.degenerate && !cp.adjusted);
        }
        assert_abs_diff_eq!(ridge(30.0).position.z, 5.773502691896258, epsilon = 1e-12);
    }

    #[test]
    fn rejects_degenerate_pairs() {
        let p = Vec3::new(1.0, 2.0, 3.0);
        assert!(control_point(p, Vec3::z(), p, Vec3::z()).is_err());
        assert!(control_point(p, Vec3::z(), p + Vec3::new(0.0, 0.0, 5.0), Vec3::z()).is_err());
    }

    #[test]
    fn adjustment_in_bounds_is_noop() {
        let p1 = Vec3::zeros();
        let p2 = Vec3::new(10.0, 0.0, 0.0);
        let mid = Vec3::new(5.0, 0.0, 0.0);
        assert_eq!(adjust_control_point(p1, p2, mid, DEFAULT_ADJUST_DELTA), mid);
    }

    /// Smallest s ≥ 0 at which `cp + s·l` is within `span` of both ends.
    fn first_admissible(p1: Vec3, p2: Vec3, cp: Vec3, l: Vec3) -> f64 {
        let span2 = (p1 - p2).norm_squared();
        // |cp + s l − p|² = span² is a quadratic in s; the admissible set of
        // each constraint is the interval between its roots.
        let interval = |p: Vec3| {
            let d = cp - p;
            let (a, b, c) = (l.dot(&l), 2.0 * l.dot(&d), d.dot(&d) - span2);
            let disc = (b * b - 4.0 * a * c).sqrt();
            ((-b - disc) / (2.0 * a), (-b + disc) / (2.0 * a))
        };
        let (lo1, _) = interval(p1);
        let (lo2, _) = interval(p2);
        lo1.max(lo2).max(0.0)
    }

    #[test]
    fn adjustment_matches_closed_form_root() {
        let p1 = Vec3::zeros();
        let p2 = Vec3::new(1.0, 0.0, 0.0);
        let cp = Vec3::new(0.5, 0.0, 2.0);
        let l = p1 - cp;
        // 4.25 s² − 7.5 s + 3.25 = 0 → s = 13/17.
        let s = first_admissible(p1, p2, cp, l);
        assert_abs_diff_eq!(s, 13.0 / 17.0, epsilon = 1e-12);
        let got = adjust_control_point(p1, p2, cp, DEFAULT_ADJUST_DELTA);
        let want = cp + l * s;
        assert!((got - want).norm() <= l.norm() * DEFAULT_ADJUST_DELTA);
        assert_abs_diff_eq!(got, Vec3::new(0.1176, 0.0, 0.4706), epsilon = 1e-3);

        let p2 = Vec3::new(10.0, 0.0, 0.0);
        let cp = Vec3::new(5.0, 0.0, 20.0);
        let l = p1 - cp;
        let s = first_admissible(p1, p2, cp, l);
        let got = adjust_control_point(p1, p2, cp, DEFAULT_ADJUST_DELTA);
        assert!((got - (cp + l * s)).norm() <= l.norm() * DEFAULT_ADJUST_DELTA);
        assert!((got - p1).norm() <= 10.0 && (got - p2).norm() <= 10.0);
    }

    #[test]
    fn central_examples() {
        let p = Vec3::new(1.5, -2.0, 7.0);
        assert_eq!(central_control_point(p, p, p, p), p);
        assert_eq!(
            central_control_point(Vec3::zeros(), Vec3::x(), Vec3::new(1.0, 1.0, 0.0), Vec3::y()),
            Vec3::new(0.5, 0.5, 0.0)
        );
        assert_eq!(
            central_control_point(
                Vec3::zeros(),
                Vec3::new(2.0, 0.0, 0.0),
                Vec3::new(0.0, 2.0, 0.0),
                Vec3::new(0.0, 0.0, 4.0)
            ),
            Vec3::new(0.5, 0.5, 1.0)
        );
    }
}
