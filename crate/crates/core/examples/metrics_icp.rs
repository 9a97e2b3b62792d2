//! Register a displaced reconstruction and measure it against ground truth.

use haptic_surface::metrics::{evaluate, hausdorff, EvaluateOptions};
use haptic_surface::pipeline::{grid_footprint, reference_cloud};
use haptic_surface::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> haptic_surface::Result<()> {
    let surface = make_surface(&SurfaceDescriptor::builtin("surface2"))?;
    let grid = probe_grid(&surface, 20.0, &NoiseSpec::noiseless(), &NormalSource::Oracle)?;
    let mesh = tessellate(&build_patch_grid(&grid)?, 12)?;
    let reference = reference_cloud(&surface, grid_footprint(&surface, 20.0)?, 1.0)?;

    // Known motion of scattered surface samples, then ICP back onto them.
    // Regular lattices alias once the motion exceeds half their step.
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let ext = surface.extent();
    let samples = (0..150)
        .map(|_| surface.sample(rng.gen_range(ext.min[0]..ext.max[0]), rng.gen_range(ext.min[1]..ext.max[1])).map(|s| s.0))
        .collect::<haptic_surface::Result<Vec<_>>>()?;
    let samples = PointCloud::new(samples);
    let motion = RigidTransform::new(Quaternion::from_axis_angle(Vec3::new(1.0, 2.0, 0.5), 3f64.to_radians()), Vec3::new(1.0, -0.5, 0.8));
    let fit = icp_align(&samples.transformed(&motion), IcpTarget::Cloud(&samples), &IcpParams::default())?;
    let recovered = fit.transform.compose(&motion);
    println!(
        "ICP: {} iterations, residual {:.2e}, leftover rotation {:.2e} rad, translation {:.2e} mm",
        fit.iterations,
        fit.residual,
        recovered.rotation.angle_to(Quaternion::IDENTITY),
        recovered.translation.norm()
    );

    println!("Hausdorff(vertices, reference) = {:.3} mm", hausdorff(&mesh.vertex_cloud(), &reference)?);
    let cm = cloud_to_mesh(&reference, &mesh)?;
    println!("before alignment: uCM {:.3} ± {:.3}, sCM {:.3}", cm.ucm_mean, cm.ucm_std, cm.scm_mean_abs);

    let displaced = mesh.transformed(&RigidTransform::new(Quaternion::IDENTITY, Vec3::new(0.0, 0.0, 2.0)));
    for (label, opts) in [
        ("no alignment", EvaluateOptions { align: false, ..EvaluateOptions::default() }),
        ("cloud ICP only", EvaluateOptions { refine_to_mesh: false, ..EvaluateOptions::default() }),
        ("cloud + mesh ICP", EvaluateOptions::default()),
    ] {
        let m = evaluate(&displaced, &reference, &opts)?;
        println!(
            "{label:<17} uCM {:.3}  sCM {:+.3}  CC {:.3}  ({} ICP iterations)",
            m.ucm_mean, m.scm, m.cc_mean, m.icp_iters
        );
    }
    Ok(())
}
