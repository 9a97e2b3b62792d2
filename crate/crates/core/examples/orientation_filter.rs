//! Recover a contact normal from a noisy static IMU trace.
//!
//! The sensor rests tilted on a surface; the filter starts from the
//! accelerometer seed and refines it while gyro drift is removed with a
//! calibration taken at the home pose.

use haptic_surface::madgwick::{calibrate, estimate_orientation, normal_from_orientation, FilterParams};
use haptic_surface::prelude::*;
use haptic_surface::probe::synth_imu_trace;
use haptic_surface::quaternion::GRAVITY_UP;

fn main() {
    let noise = NoiseSpec::imu_typical(7);
    let home = synth_imu_trace(GRAVITY_UP, 0.0, &noise, 2.0, 100.0, 0);
    let calib = calibrate(&home, Quaternion::IDENTITY).expect("non-empty trace");
    println!("calibration: acc {:.4?}, gyr {:.4?}", calib.eps_acc_base, calib.eps_gyr_base);

    println!("{:>8} {:>10} {:>10}", "tilt", "duration", "error");
    for (k, tilt_deg) in [5.0f64, 15.0, 30.0, 45.0].into_iter().enumerate() {
        let tilt = tilt_deg.to_radians();
        let truth = Vec3::new(tilt.sin(), 0.0, tilt.cos());
        for duration in [0.1, 1.0, 5.0] {
            let trace = synth_imu_trace(truth, 0.3, &noise, duration, 100.0, 1 + k as u64);
            let q = estimate_orientation(&trace, 0.3, &calib, FilterParams::default()).expect("valid trace");
            let err = normal_from_orientation(q).angle(&truth).to_degrees();
            println!("{tilt_deg:>7.0}° {duration:>9.1}s {err:>9.3}°");
        }
    }
}
