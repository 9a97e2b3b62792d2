//! Control points between pairs of contacts.

use haptic_surface::curvature::{adjust_control_point, unadjusted_control_point, DEFAULT_ADJUST_DELTA};
use haptic_surface::prelude::*;

fn main() {
    // Symmetric ridge: both tangent lines meet above the midpoint.
    let (p1, p2) = (Vec3::zeros(), Vec3::new(20.0, 0.0, 0.0));
    for deg in [15.0f64, 30.0, 45.0, 60.0] {
        let a = deg.to_radians();
        let cp = control_point(p1, Vec3::new(-a.sin(), 0.0, a.cos()), p2, Vec3::new(a.sin(), 0.0, a.cos())).unwrap();
        println!(
            "ridge {deg:>2}°: cp = {:.4?}  expected z = {:.4}  adjusted = {}",
            cp.position.as_slice(),
            10.0 * a.tan(),
            cp.adjusted
        );
    }

    // Nearly parallel tangents put the raw point far away; the adjustment
    // walks it back until it is within one span of both contacts.
    let n1 = Vec3::new(-0.05, 0.0, 1.0).normalize();
    let n2 = Vec3::new(-0.06, 0.0, 1.0).normalize();
    let raw = unadjusted_control_point(p1, n1, p2, n2).unwrap().position;
    let fixed = adjust_control_point(p1, p2, raw, DEFAULT_ADJUST_DELTA);
    println!(
        "shallow: raw {:.2?} ({:.1} mm from p1) -> {:.2?} ({:.1} mm)",
        raw.as_slice(),
        raw.norm(),
        fixed.as_slice(),
        fixed.norm()
    );

    // Flat contacts have parallel tangent planes: the midpoint.
    let flat = control_point(p1, Vec3::z(), Vec3::new(20.0, 5.0, 0.0), Vec3::z()).unwrap();
    println!("flat: {:?} degenerate = {}", flat.position.as_slice(), flat.degenerate);
}
