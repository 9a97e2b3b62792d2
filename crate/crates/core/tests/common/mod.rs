//! Brute-force oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use haptic_surface::metrics::triangle::closest_point_on_triangle;
use haptic_surface::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Linear scan for the nearest point, lowest index on ties.
pub fn brute_nearest(points: &[Vec3], q: &Vec3) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, p) in points.iter().enumerate() {
        let d = (q - p).norm();
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Linear scan over triangles: `(triangle, closest point, distance)`.
pub fn brute_closest(mesh: &TriangleMesh, q: &Vec3) -> (usize, Vec3, f64) {
    let mut best = (0, Vec3::zeros(), f64::INFINITY);
    for i in 0..mesh.triangles.len() {
        let [a, b, c] = mesh.triangle(i);
        let p = closest_point_on_triangle(q, &a, &b, &c);
        let d = (q - p).norm();
        if d < best.2 {
            best = (i, p, d);
        }
    }
    best
}

pub fn brute_hausdorff(a: &[Vec3], b: &[Vec3]) -> f64 {
    let dir = |x: &[Vec3], y: &[Vec3]| x.iter().map(|p| brute_nearest(y, p).1).fold(0.0, f64::max);
    dir(a, b).max(dir(b, a))
}

pub fn brute_cc(a: &[Vec3], b: &[Vec3]) -> (f64, f64) {
    let d: Vec<f64> = a.iter().map(|p| brute_nearest(b, p).1).collect();
    mean_std(&d)
}

/// `(ucm_mean, signed mean)` by linear scan.
pub fn brute_cm(a: &[Vec3], mesh: &TriangleMesh) -> (f64, f64) {
    let signed: Vec<f64> = a
        .iter()
        .map(|p| {
            let (t, c, d) = brute_closest(mesh, p);
            let side = (p - c).dot(&mesh.face_normal(t));
            if d == 0.0 || side == 0.0 {
                0.0
            } else {
                d * side.signum()
            }
        })
        .collect();
    let abs: Vec<f64> = signed.iter().map(|s| s.abs()).collect();
    (mean_std(&abs).0, mean_std(&signed).0)
}

pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, var.sqrt())
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, half: f64) -> Vec3 {
    Vec3::new(rng.gen_range(-half..half), rng.gen_range(-half..half), rng.gen_range(-half..half))
}

pub fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = uniform_vec(rng, 1.0);
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Unit vector within `max_tilt` radians of +Z.
pub fn random_upward(rng: &mut ChaCha8Rng, max_tilt: f64) -> Vec3 {
    let tilt = rng.gen_range(0.0..max_tilt);
    let az = rng.gen_range(0.0..std::f64::consts::TAU);
    Vec3::new(tilt.sin() * az.cos(), tilt.sin() * az.sin(), tilt.cos())
}

pub fn random_cloud(rng: &mut ChaCha8Rng, n: usize, half: f64) -> PointCloud {
    PointCloud::new((0..n).map(|_| uniform_vec(rng, half)).collect())
}

/// Triangle soup with areas well above the degeneracy floor.
pub fn random_soup(rng: &mut ChaCha8Rng, n: usize, half: f64) -> TriangleMesh {
    let mut vertices = Vec::with_capacity(3 * n);
    let mut triangles = Vec::with_capacity(n);
    while triangles.len() < n {
        let c = uniform_vec(rng, half);
        let (a, b, d) = (c + uniform_vec(rng, 5.0), c + uniform_vec(rng, 5.0), c + uniform_vec(rng, 5.0));
        if (b - a).cross(&(d - a)).norm() < 1e-3 {
            continue;
        }
        let k = vertices.len() as u32;
        vertices.extend([a, b, d]);
        triangles.push([k, k + 1, k + 2]);
    }
    TriangleMesh::new(vertices, triangles)
}

/// Rigid motion with rotation up to `max_deg` and translation up to `max_t`.
pub fn random_motion(rng: &mut ChaCha8Rng, max_deg: f64, max_t: f64) -> RigidTransform {
    let axis = random_unit(rng);
    let angle = rng.gen_range(-max_deg..max_deg).to_radians();
    let t = random_unit(rng) * rng.gen_range(0.0..max_t);
    RigidTransform::new(Quaternion::from_axis_angle(axis, angle), t)
}

/// Run the CLI in-process: `(exit code, stdout, stderr)`.
pub fn run_cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("haptic-surface").chain(args.iter().copied());
    let code = haptic_surface::cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}
