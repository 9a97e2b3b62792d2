//! Simulated probing: vertical descents on a regular XY grid.
//!
//! Contacts are exact ray/heightfield intersections. Normals come either from
//! the surface itself (optionally perturbed) or from a synthesized static IMU
//! trace pushed through calibration and the orientation filter.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::madgwick::{calibrate, estimate_orientation, normal_from_orientation, FilterParams, ImuReading};
use crate::quaternion::{conjugate, quat_from_accel, quat_z_rotation, rotate_vector, Quaternion, GRAVITY_UP};
use crate::surface::GroundTruthSurface;
use crate::Vec3;

/// RNG stream reserved for the calibration trace.
const CALIBRATION_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSpec {
    /// Positional noise per axis, mm.
    pub sigma_pos: f64,
    /// Angular perturbation of oracle normals per tangent axis, radians.
    pub sigma_normal: f64,
    /// Accelerometer noise per axis on the normalized reading.
    pub sigma_acc: f64,
    /// Gyroscope noise per axis, rad/s.
    pub sigma_gyr: f64,
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self::noiseless()
    }
}

impl NoiseSpec {
    pub fn noiseless() -> Self {
        Self {
            sigma_pos: 0.0,
            sigma_normal: 0.0,
            sigma_acc: 0.0,
            sigma_gyr: 0.0,
            seed: 0,
        }
    }

    /// Sensor noise of a low-cost MEMS unit: 0.01 on the normalized
    /// accelerometer and 0.005 rad/s on the gyroscope.
    pub fn imu_typical(seed: u64) -> Self {
        Self {
            sigma_acc: 0.01,
            sigma_gyr: 0.005,
            seed,
            ..Self::noiseless()
        }
    }

    pub fn is_noiseless(&self) -> bool {
        self.sigma_pos == 0.0 && self.sigma_normal == 0.0 && self.sigma_acc == 0.0 && self.sigma_gyr == 0.0
    }

    /// Independent generator for one grid point; the same `(seed, stream)`
    /// always yields the same draws regardless of evaluation order.
    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImuProbeConfig {
    /// Length of the static trace recorded at each contact, seconds.
    pub duration: f64,
    /// Sample rate, Hz.
    pub rate: f64,
    pub filter: FilterParams,
    /// XY position of the arm's base joint; its bearing to each contact is
    /// the yaw fed to the initial orientation.
    pub robot_base: [f64; 2],
}

impl Default for ImuProbeConfig {
    fn default() -> Self {
        Self {
            duration: 1.0,
            rate: 100.0,
            filter: FilterParams::default(),
            robot_base: [0.0, -200.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormalSource {
    Oracle,
    Imu(ImuProbeConfig),
}

impl Default for NormalSource {
    fn default() -> Self {
        NormalSource::Oracle
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactSample {
    pub position: Vec3,
    pub normal: Vec3,
    /// `(row, col)`.
    pub grid_index: (usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactGrid {
    pub rows: usize,
    pub cols: usize,
    /// Nominal spacing in mm; `0.0` when unknown (e.g. read from a file).
    pub spacing: f64,
    /// Row-major, `rows × cols`.
    pub samples: Vec<ContactSample>,
}

impl ContactGrid {
    /// Check shape, completeness and ordering of `samples`.
    pub fn new(rows: usize, cols: usize, spacing: f64, samples: Vec<ContactSample>) -> Result<Self> {
        if rows < 2 || cols < 2 {
            return Err(Error::IncompleteGrid(format!("{rows} × {cols} grid cannot form a patch")));
        }
        if samples.len() != rows * cols {
            return Err(Error::IncompleteGrid(format!(
                "expected {} samples for {rows} × {cols}, found {}",
                rows * cols,
                samples.len()
            )));
        }
        for (k, s) in samples.iter().enumerate() {
            if s.grid_index != (k / cols, k % cols) {
                return Err(Error::IncompleteGrid(format!(
                    "sample {k} has index {:?}, expected {:?}",
                    s.grid_index,
                    (k / cols, k % cols)
                )));
            }
        }
        Ok(Self {
            rows,
            cols,
            spacing,
            samples,
        })
    }

    /// Assemble from unordered samples, requiring every `(row, col)` exactly once.
    pub fn from_unordered(spacing: f64, mut samples: Vec<ContactSample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::IncompleteGrid("no samples".into()));
        }
        let rows = samples.iter().map(|s| s.grid_index.0).max().unwrap_or(0) + 1;
        let cols = samples.iter().map(|s| s.grid_index.1).max().unwrap_or(0) + 1;
        samples.sort_by_key(|s| s.grid_index);
        for w in samples.windows(2) {
            if w[0].grid_index == w[1].grid_index {
                return Err(Error::IncompleteGrid(format!("duplicate sample at {:?}", w[0].grid_index)));
            }
        }
        if samples.len() != rows * cols {
            let missing = (0..rows * cols)
                .map(|k| (k / cols, k % cols))
                .find(|ix| samples.binary_search_by_key(ix, |s| s.grid_index).is_err());
            return Err(Error::IncompleteGrid(format!("missing sample at {missing:?}")));
        }
        Self::new(rows, cols, spacing, samples)
    }

    pub fn get(&self, row: usize, col: usize) -> &ContactSample {
        &self.samples[row * self.cols + col]
    }
}

/// X and Y coordinates of the probing grid: `spacing` apart and centred in
/// the surface extent.
pub fn probe_axes(surface: &GroundTruthSurface, spacing: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(spacing > 0.0) || !spacing.is_finite() {
        return Err(Error::InvalidInput(format!("grid spacing must be positive, got {spacing}")));
    }
    let ext = surface.extent();
    let axis = |lo: f64, len: f64| {
        let n = (len / spacing + 1e-9).floor() as usize + 1;
        let start = lo + 0.5 * (len - (n - 1) as f64 * spacing);
        (0..n).map(|k| start + k as f64 * spacing).collect::<Vec<_>>()
    };
    let xs = axis(ext.min[0], ext.width());
    let ys = axis(ext.min[1], ext.depth());
    if xs.len() < 2 || ys.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "{} × {} mm extent does not admit a 2 × 2 grid at {spacing} mm",
            ext.width(),
            ext.depth()
        )));
    }
    Ok((xs, ys))
}

/// Rotate `n` by independent Gaussian angles about two tangent axes.
fn perturb_normal(n: Vec3, sigma: f64, rng: &mut ChaCha8Rng) -> Vec3 {
    let dist = Normal::new(0.0, sigma).expect("finite sigma");
    let helper = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let t1 = n.cross(&helper).normalize();
    let t2 = n.cross(&t1);
    let axis_angle = t1 * dist.sample(rng) + t2 * dist.sample(rng);
    let angle = axis_angle.norm();
    let mut out = if angle > 0.0 {
        rotate_vector(Quaternion::from_axis_angle(axis_angle, angle), n)
    } else {
        n
    };
    if out.z <= 0.0 {
        out.z = -out.z;
    }
    out.normalize()
}

/// Static IMU readings for a sensor resting with its outward axis along
/// `true_normal`, after a base yaw of `theta_z`.
pub fn synth_imu_trace(
    true_normal: Vec3,
    theta_z: f64,
    noise: &NoiseSpec,
    duration: f64,
    rate: f64,
    stream: u64,
) -> Vec<ImuReading> {
    let q_rot = quat_z_rotation(theta_z);
    let local_normal = rotate_vector(conjugate(q_rot), true_normal.normalize());
    // Minimal tilt carrying the outward axis onto the local normal, composed
    // with the yaw; gravity seen by the sensor is g carried back through it.
    let q_tilt = conjugate(quat_from_accel(local_normal));
    let q_true = q_rot * q_tilt;
    let accel_true = rotate_vector(conjugate(q_true), GRAVITY_UP);

    let n = (duration * rate).round().max(1.0) as usize;
    let dt = 1.0 / rate;
    let mut rng = noise.rng(stream);
    let acc = (noise.sigma_acc > 0.0).then(|| Normal::new(0.0, noise.sigma_acc).expect("finite sigma"));
    let gyr = (noise.sigma_gyr > 0.0).then(|| Normal::new(0.0, noise.sigma_gyr).expect("finite sigma"));
    (0..n)
        .map(|_| {
            let mut a = accel_true;
            if let Some(d) = &acc {
                a = (a + Vec3::from_fn(|_, _| d.sample(&mut rng))).normalize();
            }
            let w = match &gyr {
                Some(d) => Vec3::from_fn(|_, _| d.sample(&mut rng)),
                None => Vec3::zeros(),
            };
            ImuReading::new(a, w, dt)
        })
        .collect()
}

/// Probe `surface` on a centred grid at `spacing` mm.
pub fn probe_grid(
    surface: &GroundTruthSurface,
    spacing: f64,
    noise: &NoiseSpec,
    normal_source: &NormalSource,
) -> Result<ContactGrid> {
    let (xs, ys) = probe_axes(surface, spacing)?;
    let (rows, cols) = (ys.len(), xs.len());

    let calibration = match normal_source {
        NormalSource::Oracle => None,
        NormalSource::Imu(cfg) => {
            let home = synth_imu_trace(GRAVITY_UP, 0.0, noise, cfg.duration, cfg.rate, CALIBRATION_STREAM);
            Some(calibrate(&home, Quaternion::IDENTITY)?)
        }
    };

    let mut samples = Vec::with_capacity(rows * cols);
    for (row, &y) in ys.iter().enumerate() {
        for (col, &x) in xs.iter().enumerate() {
            let (surface_point, true_normal) = surface.sample(x, y)?;
            let stream = 2 * (row * cols + col) as u64;
            let mut rng = noise.rng(stream);

            let mut position = surface_point;
            if noise.sigma_pos > 0.0 {
                let d = Normal::new(0.0, noise.sigma_pos).expect("finite sigma");
                position += Vec3::from_fn(|_, _| d.sample(&mut rng));
            }

            let normal = match (normal_source, &calibration) {
                (NormalSource::Imu(cfg), Some(calib)) => {
                    let theta_z = (y - cfg.robot_base[1]).atan2(x - cfg.robot_base[0]);
                    let trace = synth_imu_trace(true_normal, theta_z, noise, cfg.duration, cfg.rate, stream + 1);
                    let q = estimate_orientation(&trace, theta_z, calib, cfg.filter)?;
                    normal_from_orientation(q)
                }
                _ if noise.sigma_normal > 0.0 => perturb_normal(true_normal, noise.sigma_normal, &mut rng),
                _ => true_normal,
            };

            samples.push(ContactSample {
                position,
                normal,
                grid_index: (row, col),
            });
        }
    }
    ContactGrid::new(rows, cols, spacing, samples)
}
