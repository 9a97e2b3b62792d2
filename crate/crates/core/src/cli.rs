//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::io::MeshFormat;
use crate::pipeline::{self, PipelineConfig};
use crate::probe::{ImuProbeConfig, NormalSource};
use crate::surface::SurfaceDescriptor;

#[derive(Debug, Parser)]
#[command(name = "haptic-surface", version, about = "Reconstruct surfaces from simulated tactile probing")]
struct Cli {
    /// Pipeline configuration JSON; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Random seed; mandatory when any noise is enabled.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a ground-truth STL and its descriptor JSON.
    Generate(GenerateArgs),
    /// Probe a surface and write the contact grid CSV.
    Probe(ProbeArgs),
    /// Build the patchwork from contacts and write a mesh.
    Reconstruct(ReconstructArgs),
    /// Align a mesh to ground truth and write metrics JSON.
    Evaluate(EvaluateArgs),
    /// Run every stage for each configured surface.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false, id = "source")]
struct SurfaceChoice {
    /// One of surface1..surface5.
    #[arg(long)]
    builtin: Option<String>,
    /// Flat surface: width, depth, height in mm.
    #[arg(long, num_args = 3, value_names = ["W", "D", "H"])]
    plane: Option<Vec<f64>>,
    /// Surface descriptor JSON.
    #[arg(long)]
    descriptor: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[command(flatten)]
    surface: SurfaceChoice,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Lattice step of the STL tessellation, mm.
    #[arg(long)]
    step: Option<f64>,
    /// Write ASCII instead of binary STL.
    #[arg(long)]
    ascii: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SourceKind {
    Oracle,
    Imu,
}

#[derive(Debug, Args, Default)]
struct Overrides {
    /// Grid spacing, mm.
    #[arg(long)]
    spacing: Option<f64>,
    /// Contact position noise, mm.
    #[arg(long)]
    sigma_pos: Option<f64>,
    /// Oracle normal noise, degrees.
    #[arg(long)]
    sigma_normal_deg: Option<f64>,
    /// Accelerometer noise on the normalized reading.
    #[arg(long)]
    sigma_acc: Option<f64>,
    /// Gyroscope noise, rad/s.
    #[arg(long)]
    sigma_gyr: Option<f64>,
    #[arg(long, value_enum)]
    normal_source: Option<SourceKind>,
    /// Orientation filter gain.
    #[arg(long)]
    beta: Option<f64>,
    /// IMU sample rate, Hz.
    #[arg(long)]
    rate: Option<f64>,
    /// Samples per patch side.
    #[arg(long)]
    density: Option<usize>,
}

#[derive(Debug, Args)]
struct ProbeArgs {
    /// Descriptor JSON or STL.
    #[arg(long)]
    surface: PathBuf,
    /// Contacts CSV to write.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Args)]
struct ReconstructArgs {
    #[arg(long)]
    contacts: PathBuf,
    /// Mesh to write; `.ply` for PLY, otherwise STL.
    #[arg(long)]
    out: PathBuf,
    /// Samples per patch side.
    #[arg(long)]
    density: Option<usize>,
    /// ASCII STL instead of binary.
    #[arg(long)]
    ascii: bool,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Reconstruction mesh (STL or PLY).
    #[arg(long)]
    mesh: PathBuf,
    /// Descriptor JSON, STL, or PLY cloud.
    #[arg(long)]
    ground_truth: PathBuf,
    /// Lattice step for sampling a descriptor, mm; defaults to the value
    /// implied by spacing, density and oversampling.
    #[arg(long)]
    gt_step: Option<f64>,
    /// Metrics JSON to write.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PipelineArgs {
    /// Builtin surfaces to run instead of the configured list.
    #[arg(long, num_args = 1..)]
    builtin: Vec<String>,
    /// Output directory for all artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Keep intermediate results in memory and write only the report.
    #[arg(long)]
    in_memory: bool,
    /// Record per-stage wall-clock times in the report.
    #[arg(long)]
    timings: bool,
    #[command(flatten)]
    overrides: Overrides,
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    Ok(cfg)
}

fn apply(cfg: &mut PipelineConfig, o: &Overrides) {
    if let Some(v) = o.spacing {
        cfg.spacing = v;
    }
    if let Some(v) = o.sigma_pos {
        cfg.noise.sigma_pos = v;
    }
    if let Some(v) = o.sigma_normal_deg {
        cfg.noise.sigma_normal = v.to_radians();
    }
    if let Some(v) = o.sigma_acc {
        cfg.noise.sigma_acc = v;
    }
    if let Some(v) = o.sigma_gyr {
        cfg.noise.sigma_gyr = v;
    }
    match o.normal_source {
        Some(SourceKind::Oracle) => cfg.normal_source = NormalSource::Oracle,
        Some(SourceKind::Imu) if !matches!(cfg.normal_source, NormalSource::Imu(_)) => {
            cfg.normal_source = NormalSource::Imu(ImuProbeConfig::default())
        }
        _ => {}
    }
    if let NormalSource::Imu(imu) = &mut cfg.normal_source {
        if let Some(v) = o.beta {
            imu.filter.beta = v;
        }
        if let Some(v) = o.rate {
            imu.rate = v;
        }
    }
    if let Some(v) = o.density {
        cfg.density = v;
    }
}

fn descriptor(choice: &SurfaceChoice) -> Result<SurfaceDescriptor> {
    if let Some(name) = &choice.builtin {
        let d = SurfaceDescriptor::builtin(name);
        d.resolve()?;
        Ok(d)
    } else if let Some(p) = &choice.plane {
        Ok(SurfaceDescriptor::Plane {
            width: p[0],
            depth: p[1],
            height: p[2],
        })
    } else if let Some(path) = &choice.descriptor {
        crate::io::read_json(path)
    } else {
        Err(Error::Usage("choose --builtin, --plane or --descriptor".into()))
    }
}

fn mesh_format(path: &Path, ascii: bool) -> MeshFormat {
    match MeshFormat::from_path(path) {
        MeshFormat::StlBinary if ascii => MeshFormat::StlAscii,
        f => f,
    }
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let mut cfg = load_config(&cli)?;
    let w = |e: std::io::Error| Error::io("<stdout>", e);
    match cli.command {
        Command::Generate(a) => {
            let desc = descriptor(&a.surface)?;
            let step = a.step.unwrap_or(cfg.generate_step);
            if !(step > 0.0) {
                return Err(Error::InvalidInput(format!("step must be positive, got {step}")));
            }
            let format = if a.ascii { MeshFormat::StlAscii } else { MeshFormat::StlBinary };
            let (stl, json) = pipeline::cmd_generate(&desc, &a.out, step, format)?;
            writeln!(out, "{}\n{}", stl.display(), json.display()).map_err(w)?;
        }
        Command::Probe(a) => {
            apply(&mut cfg, &a.overrides);
            let grid = pipeline::cmd_probe(&a.surface, &a.out, &cfg)?;
            writeln!(out, "{} × {} contacts -> {}", grid.rows, grid.cols, a.out.display()).map_err(w)?;
        }
        Command::Reconstruct(a) => {
            let d = a.density.unwrap_or(cfg.density);
            let mesh = pipeline::cmd_reconstruct(&a.contacts, d, &a.out, mesh_format(&a.out, a.ascii))?;
            writeln!(out, "{} triangles -> {}", mesh.triangles.len(), a.out.display()).map_err(w)?;
        }
        Command::Evaluate(a) => {
            cfg.validate()?;
            let step = a.gt_step.unwrap_or_else(|| cfg.gt_step());
            let m = pipeline::cmd_evaluate(&a.mesh, &a.ground_truth, step, cfg.icp, a.out.as_deref())?;
            writeln!(out, "{}", serde_json::to_string_pretty(&m)?).map_err(w)?;
        }
        Command::Pipeline(a) => {
            apply(&mut cfg, &a.overrides);
            if !a.builtin.is_empty() {
                cfg.surfaces = a.builtin.iter().map(|n| SurfaceDescriptor::builtin(n)).collect();
            }
            if a.timings {
                cfg.record_timings = true;
            }
            let dir = a.out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
            let report = if a.in_memory {
                let r = pipeline::run_pipeline(&cfg)?;
                crate::io::write_json(&dir.join("report.json"), &r)?;
                r
            } else {
                pipeline::cmd_pipeline(&cfg, &dir)?
            };
            write!(out, "{}", report.table()).map_err(w)?;
            writeln!(out, "report -> {}", dir.join("report.json").display()).map_err(w)?;
        }
    }
    Ok(())
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
