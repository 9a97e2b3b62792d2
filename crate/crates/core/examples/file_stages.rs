//! Drive the file-based stages the CLI uses, in a temporary directory.

use haptic_surface::io::MeshFormat;
use haptic_surface::pipeline::{cmd_evaluate, cmd_generate, cmd_probe, cmd_reconstruct};
use haptic_surface::prelude::*;

fn main() -> haptic_surface::Result<()> {
    let dir = tempfile::tempdir().expect("temporary directory");
    let cfg = PipelineConfig::default();

    let (stl, json) = cmd_generate(&SurfaceDescriptor::builtin("surface5"), dir.path(), 2.0, MeshFormat::StlBinary)?;
    let contacts = dir.path().join("contacts.csv");
    let grid = cmd_probe(&json, &contacts, &cfg)?;
    let mesh_path = dir.path().join("reconstruction.ply");
    let mesh = cmd_reconstruct(&contacts, cfg.density, &mesh_path, MeshFormat::Ply)?;
    let metrics_path = dir.path().join("metrics.json");
    let m = cmd_evaluate(&mesh_path, &json, cfg.gt_step(), cfg.icp, Some(&metrics_path))?;

    println!("{} contacts, {} triangles", grid.samples.len(), mesh.triangles.len());
    println!("against the descriptor: uCM {:.3} mm, CC {:.3} mm", m.ucm_mean, m.cc_mean);
    let m = cmd_evaluate(&mesh_path, &stl, cfg.gt_step(), cfg.icp, None)?;
    println!("against the STL vertices: uCM {:.3} mm, CC {:.3} mm", m.ucm_mean, m.cc_mean);
    for entry in std::fs::read_dir(dir.path()).expect("readable") {
        let entry = entry.expect("entry");
        println!("  {:<22} {:>8} bytes", entry.file_name().to_string_lossy(), entry.metadata().expect("metadata").len());
    }
    Ok(())
}
