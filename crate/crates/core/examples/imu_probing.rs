//! Compare IMU-derived contact normals with the analytic ones.

use haptic_surface::prelude::*;
use haptic_surface::probe::ImuProbeConfig;

fn main() -> haptic_surface::Result<()> {
    let surface = make_surface(&SurfaceDescriptor::builtin("surface1"))?;
    let oracle = probe_grid(&surface, 20.0, &NoiseSpec::noiseless(), &NormalSource::Oracle)?;

    for (label, noise, beta) in [
        ("noiseless", NoiseSpec::noiseless(), 0.1),
        ("typical", NoiseSpec::imu_typical(3), 0.1),
        ("typical, β = 0.02", NoiseSpec::imu_typical(3), 0.02),
    ] {
        let mut cfg = ImuProbeConfig::default();
        cfg.filter.beta = beta;
        let imu = probe_grid(&surface, 20.0, &noise, &NormalSource::Imu(cfg))?;
        let errs: Vec<f64> = imu
            .samples
            .iter()
            .zip(&oracle.samples)
            .map(|(a, b)| a.normal.angle(&b.normal).to_degrees())
            .collect();
        let mean = errs.iter().sum::<f64>() / errs.len() as f64;
        let max = errs.iter().cloned().fold(0.0, f64::max);
        println!("{label:<18} mean {mean:.3}°  max {max:.3}°");
    }

    let worst = oracle.samples.iter().max_by(|a, b| a.normal.z.total_cmp(&b.normal.z).reverse()).unwrap();
    println!(
        "steepest contact {:?}: tilt {:.1}°",
        worst.grid_index,
        worst.normal.z.acos().to_degrees()
    );
    Ok(())
}
