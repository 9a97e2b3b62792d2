//! Gradient-descent orientation filter and static bias calibration.
//!
//! The objective is `f = q* ⊗ g ⊗ q − a_s`: the base-frame gravity carried
//! into the sensor frame by the current estimate, minus the measured
//! direction. Each update adds the gyroscope rate `½ q ⊗ ω` and steps
//! against the normalized gradient `J^T f`, then renormalizes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quaternion::{
    compose_initial_orientation, conjugate, hamilton_product, quat_from_accel, quat_z_rotation,
    rotate_vector, Quaternion, GRAVITY_UP,
};
use crate::Vec3;

/// Sensor outward axis in its own frame; the surface normal is this axis
/// carried into the base frame.
pub const SENSOR_OUTWARD_AXIS: Vec3 = Vec3::new(0.0, 0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuReading {
    /// Normalized accelerometer direction.
    pub accel: Vec3,
    /// Angular rate, rad/s.
    pub gyro: Vec3,
    /// Seconds since the previous reading.
    pub dt: f64,
}

impl ImuReading {
    pub fn new(accel: Vec3, gyro: Vec3, dt: f64) -> Self {
        Self { accel, gyro, dt }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.accel.iter().chain(self.gyro.iter()).all(|c| c.is_finite());
        if !finite || !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(Error::InvalidInput(format!("invalid IMU reading {self:?}")));
        }
        Ok(())
    }
}

/// Accelerometer and gyroscope errors expressed in the base frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CalibrationState {
    pub eps_acc_base: Vec3,
    pub eps_gyr_base: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterParams {
    /// Correction gain. `1.0` applies the bare normalized gradient.
    pub beta: f64,
    /// Below this gradient norm the correction is skipped.
    pub grad_epsilon: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            beta: 0.1,
            grad_epsilon: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterState {
    pub q: Quaternion,
    pub beta: f64,
    pub grad_epsilon: f64,
}

impl FilterState {
    pub fn new(q: Quaternion, params: FilterParams) -> Self {
        Self {
            q,
            beta: params.beta,
            grad_epsilon: params.grad_epsilon,
        }
    }

    pub fn update(&mut self, reading: &ImuReading) {
        *self = filter_update(*self, reading);
    }
}

/// Residual of the gravity objective and its gradient `J^T f`.
pub fn objective_and_jacobian(q: Quaternion, a_s: Vec3) -> (Vec3, Quaternion) {
    let Quaternion { w, x, y, z } = q;
    let f = Vec3::new(
        2.0 * (x * z - w * y) - a_s.x,
        2.0 * (w * x + y * z) - a_s.y,
        2.0 * (0.5 - x * x - y * y) - a_s.z,
    );
    // Rows of J over (w, x, y, z):
    //   [-2y,  2z, -2w, 2x]
    //   [ 2x,  2w,  2z, 2y]
    //   [  0, -4x, -4y,  0]
    let grad = Quaternion::new(
        -2.0 * y * f.x + 2.0 * x * f.y,
        2.0 * z * f.x + 2.0 * w * f.y - 4.0 * x * f.z,
        -2.0 * w * f.x + 2.0 * z * f.y - 4.0 * y * f.z,
        2.0 * x * f.x + 2.0 * y * f.y,
    );
    (f, grad)
}

/// One explicit Euler step of the filter.
pub fn filter_update(state: FilterState, reading: &ImuReading) -> FilterState {
    let q = state.q;
    let q_dot_omega = hamilton_product(q, Quaternion::pure(reading.gyro)) * 0.5;

    let mut q_dot = q_dot_omega;
    let a_norm = reading.accel.norm();
    if a_norm > 0.0 && state.beta > 0.0 {
        let (_, grad) = objective_and_jacobian(q, reading.accel / a_norm);
        let g_norm = grad.norm();
        if g_norm >= state.grad_epsilon {
            q_dot = q_dot - grad * (state.beta / g_norm);
        }
    }

    FilterState {
        q: (q + q_dot * reading.dt).normalize(),
        ..state
    }
}

/// Average a static stream and express its errors in the base frame.
///
/// `q_s_b` is used as `q_s_b* ⊗ v ⊗ q_s_b`, i.e. it is the conjugate of the
/// orientation estimate of the sensor while the stream was recorded.
pub fn calibrate(static_readings: &[ImuReading], q_s_b: Quaternion) -> Result<CalibrationState> {
    if static_readings.is_empty() {
        return Err(Error::EmptyCalibration);
    }
    let n = static_readings.len() as f64;
    let (sum_a, sum_w) = static_readings
        .iter()
        .fold((Vec3::zeros(), Vec3::zeros()), |(a, w), r| (a + r.accel, w + r.gyro));
    let to_base = conjugate(q_s_b);
    Ok(CalibrationState {
        eps_acc_base: rotate_vector(to_base, sum_a / n) - GRAVITY_UP,
        eps_gyr_base: rotate_vector(to_base, sum_w / n),
    })
}

/// Rotate the base-frame errors into the sensor frame with `q_t` and
/// subtract them from the reading.
pub fn correct_reading(reading: &ImuReading, calib: &CalibrationState, q_t: Quaternion) -> ImuReading {
    let to_sensor = conjugate(q_t);
    ImuReading {
        accel: reading.accel - rotate_vector(to_sensor, calib.eps_acc_base),
        gyro: reading.gyro - rotate_vector(to_sensor, calib.eps_gyr_base),
        dt: reading.dt,
    }
}

pub fn normal_from_orientation(q: Quaternion) -> Vec3 {
    rotate_vector(q, SENSOR_OUTWARD_AXIS).normalize()
}

/// Seed from the first (corrected) reading and the base yaw, then filter
/// the whole trace with per-step bias correction.
pub fn estimate_orientation(
    trace: &[ImuReading],
    theta_z: f64,
    calib: &CalibrationState,
    params: FilterParams,
) -> Result<Quaternion> {
    let first = trace
        .first()
        .ok_or(Error::Empty("IMU trace"))?;
    first.validate()?;

    let q_rot = quat_z_rotation(theta_z);
    // The initial correction needs an orientation; use the yaw-only pose
    // and refine once with the seeded estimate.
    let mut seed = correct_reading(first, calib, q_rot);
    let mut q = compose_initial_orientation(q_rot, quat_from_accel(seed.accel.normalize()));
    seed = correct_reading(first, calib, q);
    q = compose_initial_orientation(q_rot, quat_from_accel(seed.accel.normalize()));

    let mut state = FilterState::new(q, params);
    for reading in trace {
        reading.validate()?;
        let corrected = correct_reading(reading, calib, state.q);
        state.update(&corrected);
    }
    Ok(state.q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn aligned_objective_vanishes() {
        let (f, g) = objective_and_jacobian(Quaternion::IDENTITY, GRAVITY_UP);
        assert_eq!(f, Vec3::zeros());
        assert_eq!(g.norm(), 0.0);
    }

    #[test]
    fn objective_by_hand() {
        // Rows at identity: 2(0-0)-1, 2(0+0)-0, 2(1/2-0)-0.
        let (f, _) = objective_and_jacobian(Quaternion::IDENTITY, Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(f, Vec3::new(-1.0, 0.0, 1.0));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let q = Quaternion::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            )
            .normalize();
            let a = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                .normalize();
            let (_, grad) = objective_and_jacobian(q, a);
            let half_sq = |p: Quaternion| 0.5 * objective_and_jacobian(p, a).0.norm_squared();
            let h = 1e-6;
            let mut fd = [0.0; 4];
            for (k, slot) in fd.iter_mut().enumerate() {
                let mut e = [0.0; 4];
                e[k] = h;
                let e = Quaternion::from_array(e);
                *slot = (half_sq(q + e) - half_sq(q - e)) / (2.0 * h);
            }
            let fd = Quaternion::from_array(fd);
            let rel = (fd - grad).norm() / grad.norm().max(1e-12);
            assert!(rel <= 1e-6, "relative gradient error {rel}");
        }
    }

    #[test]
    fn static_identity_is_fixed_point() {
        let s = FilterState::new(Quaternion::IDENTITY, FilterParams::default());
        let next = filter_update(s, &ImuReading::new(GRAVITY_UP, Vec3::zeros(), 0.01));
        assert_eq!(next.q, Quaternion::IDENTITY);
    }

    #[test]
    fn one_gyro_euler_step() {
        let s = FilterState::new(Quaternion::IDENTITY, FilterParams { beta: 0.0, grad_epsilon: 1e-12 });
        let next = filter_update(s, &ImuReading::new(GRAVITY_UP, Vec3::new(0.0, 0.0, PI), 0.001));
        let expect = Quaternion::new(1.0, 0.0, 0.0, FRAC_PI_2 * 0.001).normalize();
        assert!((next.q - expect).norm() < 1e-15);
    }

    #[test]
    fn gyro_integration_accuracy() {
        let axis = Vec3::new(1.0, -2.0, 0.5).normalize();
        let omega = 0.8;
        let dt = 1e-4;
        let steps = 20_000;
        let mut s = FilterState::new(Quaternion::IDENTITY, FilterParams { beta: 0.0, grad_epsilon: 1e-12 });
        let r = ImuReading::new(GRAVITY_UP, axis * omega, dt);
        for _ in 0..steps {
            s.update(&r);
            assert!((s.q.norm() - 1.0).abs() < 1e-6);
        }
        let angle = s.q.angle_to(Quaternion::IDENTITY);
        let expect = omega * dt * steps as f64;
        assert!(((angle - expect) / expect).abs() < 1e-3, "{angle} vs {expect}");
    }

    #[test]
    fn static_stream_converges_from_tilt() {
        for seed in 0..5u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let na = Normal::new(0.0, 0.01).unwrap();
            let ng = Normal::new(0.0, 0.005).unwrap();
            let tilt = Quaternion::from_axis_angle(Vec3::new(1.0, 1.0, 0.0), 20f64.to_radians());
            let mut s = FilterState::new(tilt, FilterParams::default());
            for _ in 0..500 {
                let a = GRAVITY_UP + Vec3::from_fn(|_, _| na.sample(&mut rng));
                let g = Vec3::from_fn(|_, _| ng.sample(&mut rng));
                s.update(&ImuReading::new(a.normalize(), g, 0.01));
                assert!((s.q.norm() - 1.0).abs() < 1e-6);
            }
            let err = s.q.angle_to(Quaternion::IDENTITY).to_degrees();
            assert!(err < 2.0, "seed {seed}: {err} deg");
        }
    }

    fn biased_stream(n: usize) -> Vec<ImuReading> {
        vec![ImuReading::new(Vec3::new(0.01, 0.0, 1.0), Vec3::new(0.002, 0.0, 0.0), 0.01); n]
    }

    #[test]
    fn calibration_examples() {
        assert!(matches!(calibrate(&[], Quaternion::IDENTITY), Err(Error::EmptyCalibration)));

        let clean = vec![ImuReading::new(GRAVITY_UP, Vec3::zeros(), 0.01); 10];
        let c = calibrate(&clean, Quaternion::IDENTITY).unwrap();
        assert_eq!(c, CalibrationState::default());

        let c = calibrate(&biased_stream(10), Quaternion::IDENTITY).unwrap();
        assert_abs_diff_eq!(c.eps_acc_base, Vec3::new(0.01, 0.0, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(c.eps_gyr_base, Vec3::new(0.002, 0.0, 0.0), epsilon = 1e-15);

        // q* v q with a quarter turn about Z turns +x into -y.
        let c = calibrate(&biased_stream(10), quat_z_rotation(FRAC_PI_2)).unwrap();
        assert_abs_diff_eq!(c.eps_acc_base, Vec3::new(0.0, -0.01, 0.0), epsilon = 1e-12);
        assert_abs_diff_eq!(c.eps_gyr_base, Vec3::new(0.0, -0.002, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn correction_examples() {
        let r = ImuReading::new(Vec3::new(0.2, 0.1, 0.97), Vec3::new(0.1, 0.0, 0.0), 0.01);
        let q = Quaternion::new(0.9, 0.1, 0.3, -0.2).normalize();
        assert_eq!(correct_reading(&r, &CalibrationState::default(), q), r);

        let calib = CalibrationState {
            eps_acc_base: Vec3::new(0.01, 0.0, 0.0),
            eps_gyr_base: Vec3::zeros(),
        };
        let c = correct_reading(&r, &calib, Quaternion::IDENTITY);
        assert_abs_diff_eq!(c.accel, r.accel - Vec3::new(0.01, 0.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn calibration_closure() {
        let stream = biased_stream(50);
        let calib = calibrate(&stream, Quaternion::IDENTITY).unwrap();
        let corrected: Vec<_> = stream
            .iter()
            .map(|r| correct_reading(r, &calib, Quaternion::IDENTITY))
            .collect();
        let n = corrected.len() as f64;
        let ma = corrected.iter().map(|r| r.accel).sum::<Vec3>() / n;
        let mw = corrected.iter().map(|r| r.gyro).sum::<Vec3>() / n;
        assert!((ma - GRAVITY_UP).amax() <= 1e-9);
        assert!(mw.amax() <= 1e-9);
    }

    #[test]
    fn calibration_closure_tilted_pose() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let q = Quaternion::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            )
            .normalize();
            let bias_a = Vec3::new(rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05));
            let bias_w = Vec3::new(rng.gen_range(-0.01..0.01), rng.gen_range(-0.01..0.01), rng.gen_range(-0.01..0.01));
            let nominal = rotate_vector(conjugate(q), GRAVITY_UP);
            let stream = vec![ImuReading::new(nominal + bias_a, bias_w, 0.01); 20];
            let calib = calibrate(&stream, conjugate(q)).unwrap();
            for r in &stream {
                let c = correct_reading(r, &calib, q);
                assert!((c.accel - nominal).amax() <= 1e-9);
                assert!(c.gyro.amax() <= 1e-9);
            }
        }
    }

    #[test]
    fn normal_examples() {
        assert_eq!(normal_from_orientation(Quaternion::IDENTITY), Vec3::new(0.0, 0.0, 1.0));
        let q = quat_from_accel(Vec3::new(1.0, 0.0, 0.0));
        let n = normal_from_orientation(q);
        assert_abs_diff_eq!(n, rotate_vector(q, SENSOR_OUTWARD_AXIS), epsilon = 1e-9);
        assert_abs_diff_eq!(n, Vec3::new(-1.0, 0.0, 0.0), epsilon = 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let q = Quaternion::new(rng.gen(), rng.gen(), rng.gen(), rng.gen()).normalize();
            assert!((normal_from_orientation(q).norm() - 1.0).abs() <= 1e-9);
        }
    }
}
