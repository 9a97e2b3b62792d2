//! Exact closest point on a triangle (Voronoi-region walk).

use crate::Vec3;

pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }

    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }

    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }

    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }

    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }

    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }

    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3, n: usize) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..=n {
            for j in 0..=(n - i) {
                let u = i as f64 / n as f64;
                let v = j as f64 / n as f64;
                let q = a + (b - a) * u + (c - a) * v;
                best = best.min((p - q).norm());
            }
        }
        best
    }

    /// Minimum over the plane projection (when inside) and the three clamped
    /// edge projections.
    fn candidates(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
        let seg = |s: &Vec3, e: &Vec3| {
            let d = e - s;
            let t = ((p - s).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
            (p - (s + d * t)).norm()
        };
        let mut best = seg(a, b).min(seg(b, c)).min(seg(c, a));
        let n = (b - a).cross(&(c - a)).normalize();
        let q = p - n * (p - a).dot(&n);
        let inside = [(a, b), (b, c), (c, a)]
            .iter()
            .all(|(s, e)| (*e - *s).cross(&(q - *s)).dot(&n) >= 0.0);
        if inside {
            best = best.min((p - q).norm());
        }
        best
    }

    #[test]
    fn face_interior() {
        let a = Vec3::zeros();
        let b = Vec3::new(1.0, 0.0, 0.0);
        let c = Vec3::new(0.0, 1.0, 0.0);
        let q = closest_point_on_triangle(&Vec3::new(0.25, 0.25, 1.0), &a, &b, &c);
        assert!((q - Vec3::new(0.25, 0.25, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn regions() {
        let a = Vec3::zeros();
        let b = Vec3::new(1.0, 0.0, 0.0);
        let c = Vec3::new(0.0, 1.0, 0.0);
        let at = |x, y, z| closest_point_on_triangle(&Vec3::new(x, y, z), &a, &b, &c);
        assert_eq!(at(-1.0, -1.0, 0.0), a);
        assert_eq!(at(2.0, -0.5, 0.0), b);
        assert_eq!(at(-0.5, 2.0, 0.0), c);
        assert!((at(0.5, -1.0, 0.3) - Vec3::new(0.5, 0.0, 0.0)).norm() < 1e-15);
        assert!((at(-1.0, 0.5, 0.3) - Vec3::new(0.0, 0.5, 0.0)).norm() < 1e-15);
        assert!((at(1.0, 1.0, 0.0) - Vec3::new(0.5, 0.5, 0.0)).norm() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn matches_barycentric_sweep(
            v in proptest::array::uniform12(-2.0f64..2.0)
        ) {
            let a = Vec3::new(v[0], v[1], v[2]);
            let b = Vec3::new(v[3], v[4], v[5]);
            let c = Vec3::new(v[6], v[7], v[8]);
            prop_assume!((b - a).cross(&(c - a)).norm() > 0.05);
            let p = Vec3::new(v[9], v[10], v[11]) * 2.0;
            let q = closest_point_on_triangle(&p, &a, &b, &c);
            let d = (p - q).norm();
            let oracle = brute(&p, &a, &b, &c, 400);
            // The sweep can only overestimate; its lattice error is below 1e-2.
            prop_assert!(d <= oracle + 1e-12);
            prop_assert!(oracle - d < 1e-2);
            prop_assert!((d - candidates(&p, &a, &b, &c)).abs() < 1e-9);
        }
    }
}
