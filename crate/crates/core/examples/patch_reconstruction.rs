//! Probe a builtin surface, build the patchwork and write it as PLY.
//!
//! ```text
//! cargo run --example patch_reconstruction -- surface3 15 out/surface3.ply
//! ```

use std::path::PathBuf;

use haptic_surface::io::{write_mesh, MeshFormat};
use haptic_surface::prelude::*;

fn main() -> haptic_surface::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "surface1".into());
    let spacing: f64 = args.next().map(|s| s.parse().expect("spacing in mm")).unwrap_or(20.0);
    let out = args.next().map(PathBuf::from);

    let surface = make_surface(&SurfaceDescriptor::builtin(&name))?;
    let grid = probe_grid(&surface, spacing, &NoiseSpec::noiseless(), &NormalSource::Oracle)?;
    let patches = build_patch_grid(&grid)?;
    println!("{name}: {} × {} contacts, {} patches", grid.rows, grid.cols, patches.len());

    // Height error at the centre of every cell.
    let mut worst = 0.0f64;
    for r in 0..patches.cell_rows {
        for c in 0..patches.cell_cols {
            let p = patches.patch(r, c).evaluate(0.5, 0.5);
            worst = worst.max((p.z - surface.height(p.x, p.y)?).abs());
        }
    }
    println!("max vertical error at cell centres: {worst:.3} mm");

    for d in [2, 5, 10, 20] {
        let mesh = tessellate(&patches, d)?;
        println!("d = {d:>2}: {:>6} vertices {:>6} triangles", mesh.vertices.len(), mesh.triangles.len());
    }
    if let Some(path) = out {
        write_mesh(&path, &tessellate(&patches, 20)?, MeshFormat::Ply)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
