//! Run the five builtin surfaces and print the summary table.
//!
//! Pass `--noisy` to add 0.5 mm position and 2° normal noise.

use haptic_surface::prelude::*;

fn main() -> haptic_surface::Result<()> {
    let mut cfg = PipelineConfig {
        record_timings: true,
        ..PipelineConfig::default()
    };
    if std::env::args().any(|a| a == "--noisy") {
        cfg.noise.sigma_pos = 0.5;
        cfg.noise.sigma_normal = 2f64.to_radians();
        cfg.seed = Some(0);
    }
    let report = run_pipeline(&cfg)?;
    print!("{}", report.table());
    for s in &report.surfaces {
        if let Some(t) = &s.timings {
            println!(
                "{:<10} {}×{} grid, {} triangles, probe {:.0} ms, reconstruct {:.0} ms, evaluate {:.0} ms",
                s.name, s.rows, s.cols, s.triangles, t.probe_ms, t.reconstruct_ms, t.evaluate_ms
            );
        }
    }
    println!("config {}", &report.config_hash[..12]);
    Ok(())
}
