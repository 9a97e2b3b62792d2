//! Ground-truth surfaces: analytic heightfields and triangle-mesh heightfields.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{PointCloud, TriangleMesh};
use crate::Vec3;

/// Axis-aligned rectangle in the XY plane, mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Rect {
    pub fn from_size(width: f64, depth: f64) -> Self {
        Self {
            min: [0.0, 0.0],
            max: [width, depth],
        }
    }

    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn depth(&self) -> f64 {
        self.max[1] - self.min[1]
    }

    pub fn contains(&self, x: f64, y: f64, tol: f64) -> bool {
        x >= self.min[0] - tol && x <= self.max[0] + tol && y >= self.min[1] - tol && y <= self.max[1] + tol
    }
}

/// One additive component of an analytic heightfield.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Term {
    Constant {
        value: f64,
    },
    /// `slope_x·x + slope_y·y`.
    Ramp {
        slope_x: f64,
        slope_y: f64,
    },
    /// `A·exp(−((x−cx)²/2σx² + (y−cy)²/2σy²))`.
    Gaussian {
        amplitude: f64,
        center: [f64; 2],
        sigma: [f64; 2],
    },
    /// `A·cx(x)·cy(y)` with `c(t) = cos(2π t/λ + φ)`, or 1 when `λ = 0`.
    Cosine {
        amplitude: f64,
        wavelength: [f64; 2],
        #[serde(default)]
        phase: [f64; 2],
    },
    /// `A·(u² − v²)` with `u = (x−cx)/hx`, `v = (y−cy)/hy`.
    Saddle {
        amplitude: f64,
        center: [f64; 2],
        half_extent: [f64; 2],
    },
}

impl Term {
    /// Height and gradient `(f, ∂f/∂x, ∂f/∂y)`.
    fn eval(&self, x: f64, y: f64) -> (f64, f64, f64) {
        use std::f64::consts::TAU;
        match *self {
            Term::Constant { value } => (value, 0.0, 0.0),
            Term::Ramp { slope_x, slope_y } => (slope_x * x + slope_y * y, slope_x, slope_y),
            Term::Gaussian {
                amplitude,
                center,
                sigma,
            } => {
                let dx = x - center[0];
                let dy = y - center[1];
                let (sx2, sy2) = (sigma[0] * sigma[0], sigma[1] * sigma[1]);
                let f = amplitude * (-(dx * dx / (2.0 * sx2) + dy * dy / (2.0 * sy2))).exp();
                (f, -f * dx / sx2, -f * dy / sy2)
            }
            Term::Cosine {
                amplitude,
                wavelength,
                phase,
            } => {
                let factor = |t: f64, l: f64, p: f64| {
                    if l == 0.0 {
                        (1.0, 0.0)
                    } else {
                        let k = TAU / l;
                        let a = k * t + p;
                        (a.cos(), -k * a.sin())
                    }
                };
                let (cx, dcx) = factor(x, wavelength[0], phase[0]);
                let (cy, dcy) = factor(y, wavelength[1], phase[1]);
                (amplitude * cx * cy, amplitude * dcx * cy, amplitude * cx * dcy)
            }
            Term::Saddle {
                amplitude,
                center,
                half_extent,
            } => {
                let u = (x - center[0]) / half_extent[0];
                let v = (y - center[1]) / half_extent[1];
                (
                    amplitude * (u * u - v * v),
                    2.0 * amplitude * u / half_extent[0],
                    -2.0 * amplitude * v / half_extent[1],
                )
            }
        }
    }
}

/// JSON surface descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SurfaceDescriptor {
    /// One of `surface1` … `surface5`.
    Builtin { name: String },
    Plane { width: f64, depth: f64, height: f64 },
    Heightfield { width: f64, depth: f64, terms: Vec<Term> },
    Stl { path: PathBuf },
}

pub const BUILTIN_NAMES: [&str; 5] = ["surface1", "surface2", "surface3", "surface4", "surface5"];

impl SurfaceDescriptor {
    pub fn builtin(name: &str) -> Self {
        SurfaceDescriptor::Builtin { name: name.to_string() }
    }

    /// Expand a builtin name into its analytic definition; other kinds are
    /// returned unchanged.
    pub fn resolve(&self) -> Result<SurfaceDescriptor> {
        match self {
            SurfaceDescriptor::Builtin { name } => builtin_heightfield(name),
            other => Ok(other.clone()),
        }
    }
}

/// Smooth analogs of the five test surfaces, sized in mm.
fn builtin_heightfield(name: &str) -> Result<SurfaceDescriptor> {
    let (width, depth, terms) = match name {
        // 80 × 80, single 30 mm dome.
        "surface1" => (
            80.0,
            80.0,
            vec![Term::Gaussian {
                amplitude: 30.0,
                center: [40.0, 40.0],
                sigma: [18.0, 18.0],
            }],
        ),
        // 80 × 80, saddle between 10 and 20 mm.
        "surface2" => (
            80.0,
            80.0,
            vec![
                Term::Constant { value: 15.0 },
                Term::Saddle {
                    amplitude: 5.0,
                    center: [40.0, 40.0],
                    half_extent: [40.0, 40.0],
                },
            ],
        ),
        // 160 × 50, one wave along X between 10 and 25 mm.
        "surface3" => (
            160.0,
            50.0,
            vec![
                Term::Constant { value: 17.5 },
                Term::Cosine {
                    amplitude: 7.5,
                    wavelength: [160.0, 0.0],
                    phase: [-std::f64::consts::FRAC_PI_2, 0.0],
                },
            ],
        ),
        // 190 × 40, central hump between 10 and 25 mm.
        "surface4" => (
            190.0,
            40.0,
            vec![
                Term::Constant { value: 17.5 },
                Term::Cosine {
                    amplitude: 7.5,
                    wavelength: [190.0, 0.0],
                    phase: [-std::f64::consts::PI, 0.0],
                },
            ],
        ),
        // 200 × 160, shallow egg-crate between 0 and 10 mm.
        "surface5" => (
            200.0,
            160.0,
            vec![
                Term::Constant { value: 5.0 },
                Term::Cosine {
                    amplitude: 5.0,
                    wavelength: [200.0, 160.0],
                    phase: [0.0, 0.0],
                },
            ],
        ),
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown builtin surface {other:?} (expected one of {BUILTIN_NAMES:?})"
            )))
        }
    };
    Ok(SurfaceDescriptor::Heightfield { width, depth, terms })
}

/// Vertical-ray heightfield over a triangle mesh, bucketed on an XY grid.
#[derive(Debug, Clone)]
pub struct MeshHeightfield {
    mesh: TriangleMesh,
    extent: Rect,
    cells: [usize; 2],
    buckets: Vec<Vec<u32>>,
}

impl MeshHeightfield {
    pub fn new(mesh: TriangleMesh) -> Result<Self> {
        if mesh.is_empty() {
            return Err(Error::Empty("surface mesh"));
        }
        let (lo, hi) = mesh.xy_bounds().ok_or(Error::Empty("surface mesh"))?;
        let extent = Rect { min: lo, max: hi };
        if !(extent.width() > 0.0 && extent.depth() > 0.0) {
            return Err(Error::Degenerate("surface mesh has no XY footprint".into()));
        }
        let side = ((mesh.triangles.len() as f64).sqrt().ceil() as usize).clamp(1, 1024);
        let cells = [side, side];
        let mut buckets = vec![Vec::new(); side * side];
        let mut hf = Self {
            mesh,
            extent,
            cells,
            buckets: Vec::new(),
        };
        for (i, _) in hf.mesh.triangles.iter().enumerate() {
            let [a, b, c] = hf.mesh.triangle(i);
            let (c0, r0) = hf.cell_of(a.x.min(b.x).min(c.x), a.y.min(b.y).min(c.y));
            let (c1, r1) = hf.cell_of(a.x.max(b.x).max(c.x), a.y.max(b.y).max(c.y));
            for r in r0..=r1 {
                for col in c0..=c1 {
                    buckets[r * side + col].push(i as u32);
                }
            }
        }
        hf.buckets = buckets;
        Ok(hf)
    }

    fn cell_of(&self, x: f64, y: f64) -> (usize, usize) {
        let fx = (x - self.extent.min[0]) / self.extent.width();
        let fy = (y - self.extent.min[1]) / self.extent.depth();
        let c = ((fx * self.cells[0] as f64).floor().max(0.0) as usize).min(self.cells[0] - 1);
        let r = ((fy * self.cells[1] as f64).floor().max(0.0) as usize).min(self.cells[1] - 1);
        (c, r)
    }

    pub fn mesh(&self) -> &TriangleMesh {
        &self.mesh
    }

    /// Highest hit of the vertical line through `(x, y)`: `(z, upward unit normal)`.
    pub fn ray_hit(&self, x: f64, y: f64) -> Option<(f64, Vec3)> {
        if !self.extent.contains(x, y, 1e-9) {
            return None;
        }
        let (c, r) = self.cell_of(x, y);
        let mut best: Option<(f64, Vec3)> = None;
        for &i in &self.buckets[r * self.cells[0] + c] {
            let [a, b, cc] = self.mesh.triangle(i as usize);
            let det = (b.x - a.x) * (cc.y - a.y) - (cc.x - a.x) * (b.y - a.y);
            if det.abs() < 1e-15 {
                continue;
            }
            let l1 = ((x - a.x) * (cc.y - a.y) - (cc.x - a.x) * (y - a.y)) / det;
            let l2 = ((b.x - a.x) * (y - a.y) - (x - a.x) * (b.y - a.y)) / det;
            let l0 = 1.0 - l1 - l2;
            let tol = -1e-12;
            if l0 < tol || l1 < tol || l2 < tol {
                continue;
            }
            let z = l0 * a.z + l1 * b.z + l2 * cc.z;
            if best.map_or(true, |(bz, _)| z > bz) {
                let mut n = (b - a).cross(&(cc - a)).normalize();
                if n.z < 0.0 {
                    n = -n;
                }
                best = Some((z, n));
            }
        }
        best
    }
}

#[derive(Debug, Clone)]
enum SurfaceKind {
    Analytic(Vec<Term>),
    Mesh(MeshHeightfield),
}

#[derive(Debug, Clone)]
pub struct GroundTruthSurface {
    extent: Rect,
    kind: SurfaceKind,
}

impl GroundTruthSurface {
    pub fn analytic(width: f64, depth: f64, terms: Vec<Term>) -> Result<Self> {
        if !(width > 0.0 && depth > 0.0) || !width.is_finite() || !depth.is_finite() {
            return Err(Error::InvalidInput(format!("surface extent {width} × {depth}")));
        }
        Ok(Self {
            extent: Rect::from_size(width, depth),
            kind: SurfaceKind::Analytic(terms),
        })
    }

    pub fn plane(width: f64, depth: f64, height: f64) -> Result<Self> {
        Self::analytic(width, depth, vec![Term::Constant { value: height }])
    }

    pub fn from_mesh(mesh: TriangleMesh) -> Result<Self> {
        let hf = MeshHeightfield::new(mesh)?;
        Ok(Self {
            extent: hf.extent,
            kind: SurfaceKind::Mesh(hf),
        })
    }

    pub fn extent(&self) -> Rect {
        self.extent
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self.kind, SurfaceKind::Analytic(_))
    }

    /// Surface point and upward unit normal above `(x, y)`.
    pub fn sample(&self, x: f64, y: f64) -> Result<(Vec3, Vec3)> {
        match &self.kind {
            SurfaceKind::Analytic(terms) => {
                if !self.extent.contains(x, y, 1e-9) {
                    return Err(Error::OutsideExtent { x, y });
                }
                let (z, fx, fy) = terms.iter().fold((0.0, 0.0, 0.0), |acc, t| {
                    let (f, gx, gy) = t.eval(x, y);
                    (acc.0 + f, acc.1 + gx, acc.2 + gy)
                });
                Ok((Vec3::new(x, y, z), Vec3::new(-fx, -fy, 1.0).normalize()))
            }
            SurfaceKind::Mesh(hf) => hf
                .ray_hit(x, y)
                .map(|(z, n)| (Vec3::new(x, y, z), n))
                .ok_or(Error::OutsideExtent { x, y }),
        }
    }

    pub fn height(&self, x: f64, y: f64) -> Result<f64> {
        self.sample(x, y).map(|(p, _)| p.z)
    }

    pub fn normal(&self, x: f64, y: f64) -> Result<Vec3> {
        self.sample(x, y).map(|(_, n)| n)
    }

    /// Regular `nx × ny` lattice over `region`, row-major in Y.
    pub fn sample_region(&self, region: Rect, nx: usize, ny: usize) -> Result<PointCloud> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidInput("sampling needs at least 2 points per axis".into()));
        }
        let mut points = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            let y = lerp(region.min[1], region.max[1], j, ny);
            for i in 0..nx {
                let x = lerp(region.min[0], region.max[0], i, nx);
                let (p, _) = self.sample(x, y)?;
                points.push(p);
            }
        }
        Ok(PointCloud::new(points))
    }

    /// Triangulated lattice of the surface, `n_per_axis²` vertices.
    pub fn tessellate(&self, nx: usize, ny: usize) -> Result<TriangleMesh> {
        let cloud = self.sample_region(self.extent, nx, ny)?;
        let mut triangles = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let a = (j * nx + i) as u32;
                let b = a + 1;
                let c = a + nx as u32 + 1;
                let d = a + nx as u32;
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
        Ok(TriangleMesh::new(cloud.points, triangles))
    }
}

/// `k`-th of `n` evenly spaced values on `[a, b]`, hitting `b` exactly.
pub(crate) fn lerp(a: f64, b: f64, k: usize, n: usize) -> f64 {
    if k + 1 == n {
        b
    } else {
        a + (b - a) * (k as f64 / (n - 1) as f64)
    }
}

/// Build a surface from a descriptor; STL paths are read from disk.
pub fn make_surface(desc: &SurfaceDescriptor) -> Result<GroundTruthSurface> {
    match desc.resolve()? {
        SurfaceDescriptor::Plane { width, depth, height } => GroundTruthSurface::plane(width, depth, height),
        SurfaceDescriptor::Heightfield { width, depth, terms } => GroundTruthSurface::analytic(width, depth, terms),
        SurfaceDescriptor::Stl { path } => GroundTruthSurface::from_mesh(crate::io::stl::read_stl(&path)?),
        SurfaceDescriptor::Builtin { .. } => unreachable!("resolved above"),
    }
}

/// Dense `n × n` sampling over the full extent.
pub fn sample_cloud(surface: &GroundTruthSurface, n_per_axis: usize) -> Result<PointCloud> {
    surface.sample_region(surface.extent(), n_per_axis, n_per_axis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn plane_queries() {
        let s = make_surface(&SurfaceDescriptor::Plane {
            width: 100.0,
            depth: 100.0,
            height: 5.0,
        })
        .unwrap();
        for (x, y) in [(0.0, 0.0), (13.0, 77.0), (100.0, 100.0)] {
            assert_eq!(s.height(x, y).unwrap(), 5.0);
            assert_eq!(s.normal(x, y).unwrap(), Vec3::z());
        }
        assert!(matches!(s.height(101.0, 0.0), Err(Error::OutsideExtent { .. })));
    }

    #[test]
    fn builtin_dimensions() {
        let s1 = make_surface(&SurfaceDescriptor::builtin("surface1")).unwrap();
        assert_eq!(s1.extent(), Rect::from_size(80.0, 80.0));
        assert_eq!(s1.height(40.0, 40.0).unwrap(), 30.0);
        let s5 = make_surface(&SurfaceDescriptor::builtin("surface5")).unwrap();
        assert_eq!(s5.extent(), Rect::from_size(200.0, 160.0));
        assert!(make_surface(&SurfaceDescriptor::builtin("surface9")).is_err());

        // Height ranges of the analogs, from a dense scan.
        let expect = [(0.0, 30.0), (10.0, 20.0), (10.0, 25.0), (10.0, 25.0), (0.0, 10.0)];
        for (name, (lo, hi)) in BUILTIN_NAMES.iter().zip(expect) {
            let s = make_surface(&SurfaceDescriptor::builtin(name)).unwrap();
            let c = sample_cloud(&s, 201).unwrap();
            let zmin = c.points.iter().map(|p| p.z).fold(f64::INFINITY, f64::min);
            let zmax = c.points.iter().map(|p| p.z).fold(f64::NEG_INFINITY, f64::max);
            assert!(zmax <= hi + 1e-9 && zmax >= hi - 0.5, "{name} max {zmax}");
            if lo > 0.0 {
                assert!(zmin >= lo - 1e-9 && zmin <= lo + 0.5, "{name} min {zmin}");
            } else {
                assert!(zmin >= -1e-9, "{name} min {zmin}");
            }
        }
    }

    #[test]
    fn gaussian_apex_normal() {
        let s = GroundTruthSurface::analytic(
            80.0,
            80.0,
            vec![Term::Gaussian {
                amplitude: 12.0,
                center: [40.0, 40.0],
                sigma: [10.0, 10.0],
            }],
        )
        .unwrap();
        assert_eq!(s.normal(40.0, 40.0).unwrap(), Vec3::z());
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let s = make_surface(&SurfaceDescriptor::Heightfield {
            width: 100.0,
            depth: 100.0,
            terms: vec![
                Term::Ramp { slope_x: 0.1, slope_y: -0.2 },
                Term::Gaussian {
                    amplitude: 8.0,
                    center: [30.0, 60.0],
                    sigma: [12.0, 20.0],
                },
                Term::Cosine {
                    amplitude: 3.0,
                    wavelength: [70.0, 45.0],
                    phase: [0.3, -1.0],
                },
                Term::Saddle {
                    amplitude: 2.0,
                    center: [50.0, 50.0],
                    half_extent: [50.0, 40.0],
                },
            ],
        })
        .unwrap();
        let h = 1e-5;
        for (x, y) in [(10.0, 10.0), (33.3, 71.0), (80.0, 25.0)] {
            let fx = (s.height(x + h, y).unwrap() - s.height(x - h, y).unwrap()) / (2.0 * h);
            let fy = (s.height(x, y + h).unwrap() - s.height(x, y - h).unwrap()) / (2.0 * h);
            let n = Vec3::new(-fx, -fy, 1.0).normalize();
            assert_abs_diff_eq!(s.normal(x, y).unwrap(), n, epsilon = 1e-8);
        }
    }

    #[test]
    fn ramp_normals() {
        let s = GroundTruthSurface::analytic(60.0, 60.0, vec![Term::Ramp { slope_x: 0.5, slope_y: 0.0 }]).unwrap();
        assert_abs_diff_eq!(s.normal(17.0, 3.0).unwrap(), Vec3::new(-0.5, 0.0, 1.0).normalize(), epsilon = 1e-15);
    }

    #[test]
    fn sample_cloud_examples() {
        let s = GroundTruthSurface::plane(10.0, 10.0, 0.0).unwrap();
        let c = sample_cloud(&s, 2).unwrap();
        assert_eq!(c.len(), 4);
        assert!(c.points.iter().all(|p| p.z == 0.0));

        let s1 = make_surface(&SurfaceDescriptor::builtin("surface1")).unwrap();
        let c = sample_cloud(&s1, 100).unwrap();
        assert_eq!(c.len(), 10_000);
        for p in &c.points {
            assert_eq!(p.z, s1.height(p.x, p.y).unwrap());
        }
        let zmax = c.points.iter().map(|p| p.z).fold(f64::MIN, f64::max);
        assert!((zmax - 30.0).abs() <= 0.5);
    }

    #[test]
    fn mesh_heightfield_matches_tessellated_source() {
        let s = make_surface(&SurfaceDescriptor::builtin("surface2")).unwrap();
        let mesh = s.tessellate(41, 41).unwrap();
        let m = GroundTruthSurface::from_mesh(mesh).unwrap();
        assert_eq!(m.extent(), s.extent());
        // Lattice vertices are reproduced exactly; saddle is smooth enough that
        // in-between points agree to a fraction of a millimetre.
        assert_abs_diff_eq!(m.height(40.0, 40.0).unwrap(), 15.0, epsilon = 1e-12);
        for (x, y) in [(3.1, 7.7), (55.5, 22.2), (79.0, 1.0)] {
            assert!((m.height(x, y).unwrap() - s.height(x, y).unwrap()).abs() < 0.05);
            assert!(m.normal(x, y).unwrap().z > 0.0);
        }
        assert!(m.height(-5.0, 1.0).is_err());
    }
}
