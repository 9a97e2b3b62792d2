//! End-to-end runs: generate, probe, reconstruct, evaluate.
//!
//! Each stage exists twice. The `cmd_*` functions read and write files so any
//! stage can be re-run on its own. [`run_surface`] and [`run_pipeline`] keep
//! everything in memory, which avoids the nine-digit rounding of the ASCII
//! formats.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io::{self, MeshFormat};
use crate::mesh::{PointCloud, TriangleMesh};
use crate::metrics::{evaluate, EvaluateOptions, IcpParams, MetricsReport};
use crate::nurbs::{build_patch_grid, tessellate, PatchGrid};
use crate::probe::{probe_axes, probe_grid, ContactGrid, NoiseSpec, NormalSource};
use crate::surface::{make_surface, GroundTruthSurface, Rect, SurfaceDescriptor, BUILTIN_NAMES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub surfaces: Vec<SurfaceDescriptor>,
    /// Probe grid spacing, mm.
    pub spacing: f64,
    pub noise: NoiseSpec,
    pub normal_source: NormalSource,
    /// Samples per patch side when tessellating.
    pub density: usize,
    /// Ground-truth samples per reconstruction lattice step.
    pub gt_oversample: usize,
    /// Lattice step of generated ground-truth STL files, mm.
    pub generate_step: f64,
    pub icp: IcpParams,
    /// Required whenever any noise is enabled.
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub record_timings: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            surfaces: BUILTIN_NAMES.iter().map(|n| SurfaceDescriptor::builtin(n)).collect(),
            spacing: 20.0,
            noise: NoiseSpec::noiseless(),
            normal_source: NormalSource::Oracle,
            density: 20,
            gt_oversample: 2,
            generate_step: 1.0,
            icp: IcpParams::default(),
            seed: None,
            output_dir: None,
            record_timings: false,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        io::read_json(path)
    }

    /// True when the run draws random numbers.
    pub fn is_noisy(&self) -> bool {
        let n = &self.noise;
        let sensor = matches!(self.normal_source, NormalSource::Imu(_)) && (n.sigma_acc > 0.0 || n.sigma_gyr > 0.0);
        n.sigma_pos > 0.0 || n.sigma_normal > 0.0 || sensor
    }

    /// Check parameters and return the noise spec with the run seed applied.
    pub fn validate(&self) -> Result<NoiseSpec> {
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::InvalidInput(format!("spacing must be positive, got {}", self.spacing)));
        }
        if self.density < 2 {
            return Err(Error::InvalidInput(format!("density must be ≥ 2, got {}", self.density)));
        }
        if self.gt_oversample < 1 {
            return Err(Error::InvalidInput("gt_oversample must be ≥ 1".into()));
        }
        if !(self.generate_step > 0.0 && self.generate_step.is_finite()) {
            return Err(Error::InvalidInput("generate_step must be positive".into()));
        }
        let n = &self.noise;
        if [n.sigma_pos, n.sigma_normal, n.sigma_acc, n.sigma_gyr].iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(Error::InvalidInput("noise sigmas must be finite and non-negative".into()));
        }
        match (self.is_noisy(), self.seed) {
            (true, None) => Err(Error::Usage("a seed is required when noise is enabled".into())),
            (_, seed) => Ok(NoiseSpec {
                seed: seed.unwrap_or(0),
                ..self.noise
            }),
        }
    }

    /// Ground-truth lattice step that nests the tessellation lattice.
    pub fn gt_step(&self) -> f64 {
        self.spacing / ((self.density - 1) * self.gt_oversample) as f64
    }

    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        format!("{:x}", Sha256::digest(json.as_bytes()))
    }
}

/// Display name: the builtin name, the STL file stem, or the kind.
pub fn surface_name(desc: &SurfaceDescriptor) -> String {
    match desc {
        SurfaceDescriptor::Builtin { name } => name.clone(),
        SurfaceDescriptor::Plane { .. } => "plane".into(),
        SurfaceDescriptor::Heightfield { .. } => "heightfield".into(),
        SurfaceDescriptor::Stl { path } => path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "stl".into()),
    }
}

/// Lattice over `region` with step close to `step`, hitting both ends.
pub fn reference_cloud(surface: &GroundTruthSurface, region: Rect, step: f64) -> Result<PointCloud> {
    let count = |len: f64| ((len / step).round() as usize + 1).max(2);
    surface.sample_region(region, count(region.width()), count(region.depth()))
}

/// Rectangle spanned by the probing grid.
pub fn grid_footprint(surface: &GroundTruthSurface, spacing: f64) -> Result<Rect> {
    let (xs, ys) = probe_axes(surface, spacing)?;
    Ok(Rect {
        min: [xs[0], ys[0]],
        max: [*xs.last().expect("≥ 2 axes"), *ys.last().expect("≥ 2 axes")],
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub probe_ms: f64,
    pub reconstruct_ms: f64,
    pub evaluate_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceReport {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub patches: usize,
    pub triangles: usize,
    pub metrics: MetricsReport,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timings: Option<StageTimings>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config_hash: String,
    pub version: String,
    pub surfaces: Vec<SurfaceReport>,
    pub mean_ucm: f64,
    pub mean_scm: f64,
    pub mean_cc: f64,
}

impl RunReport {
    pub fn new(config: &PipelineConfig, surfaces: Vec<SurfaceReport>) -> Self {
        let n = surfaces.len().max(1) as f64;
        let mean = |f: fn(&MetricsReport) -> f64| surfaces.iter().map(|s| f(&s.metrics)).sum::<f64>() / n;
        Self {
            config_hash: config.hash(),
            version: env!("CARGO_PKG_VERSION").into(),
            mean_ucm: mean(|m| m.ucm_mean),
            mean_scm: mean(|m| m.scm),
            mean_cc: mean(|m| m.cc_mean),
            surfaces,
        }
    }

    /// Plain-text table of mean ± std per surface.
    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<12} {:>17} {:>17} {:>17}\n",
            "surface", "uCM (mm)", "sCM (mm)", "CC (mm)"
        );
        let pm = |m: f64, s: f64| format!("{m:.3} ± {s:.3}");
        for s in &self.surfaces {
            let m = &s.metrics;
            out.push_str(&format!(
                "{:<12} {:>17} {:>17} {:>17}\n",
                s.name,
                pm(m.ucm_mean, m.ucm_std),
                pm(m.scm, m.scm_std),
                pm(m.cc_mean, m.cc_std)
            ));
        }
        out.push_str(&format!(
            "{:<12} {:>17} {:>17} {:>17}\n",
            "mean",
            format!("{:.3}", self.mean_ucm),
            format!("{:.3}", self.mean_scm),
            format!("{:.3}", self.mean_cc)
        ));
        out
    }
}

/// Everything produced for one surface by an in-memory run.
#[derive(Debug, Clone)]
pub struct SurfaceRun {
    pub surface: GroundTruthSurface,
    pub contacts: ContactGrid,
    pub patches: PatchGrid,
    pub mesh: TriangleMesh,
    pub reference: PointCloud,
    pub report: SurfaceReport,
}

pub fn run_surface(desc: &SurfaceDescriptor, config: &PipelineConfig) -> Result<SurfaceRun> {
    let noise = config.validate()?;
    let surface = make_surface(desc).map_err(|e| e.in_stage("generate"))?;

    let t0 = Instant::now();
    let contacts =
        probe_grid(&surface, config.spacing, &noise, &config.normal_source).map_err(|e| e.in_stage("probe"))?;
    let t1 = Instant::now();
    let patches = build_patch_grid(&contacts).map_err(|e| e.in_stage("reconstruct"))?;
    let mesh = tessellate(&patches, config.density).map_err(|e| e.in_stage("reconstruct"))?;
    let t2 = Instant::now();
    let reference = grid_footprint(&surface, config.spacing)
        .and_then(|r| reference_cloud(&surface, r, config.gt_step()))
        .map_err(|e| e.in_stage("evaluate"))?;
    let opts = EvaluateOptions {
        icp: config.icp,
        ..EvaluateOptions::default()
    };
    let metrics = evaluate(&mesh, &reference, &opts).map_err(|e| e.in_stage("evaluate"))?;
    let t3 = Instant::now();

    let ms = |a: Instant, b: Instant| (b - a).as_secs_f64() * 1e3;
    let report = SurfaceReport {
        name: surface_name(desc),
        rows: contacts.rows,
        cols: contacts.cols,
        patches: patches.len(),
        triangles: mesh.triangles.len(),
        metrics,
        timings: config.record_timings.then(|| StageTimings {
            probe_ms: ms(t0, t1),
            reconstruct_ms: ms(t1, t2),
            evaluate_ms: ms(t2, t3),
        }),
    };
    Ok(SurfaceRun {
        surface,
        contacts,
        patches,
        mesh,
        reference,
        report,
    })
}

/// In-memory run over every configured surface.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunReport> {
    let reports = config
        .surfaces
        .iter()
        .map(|d| run_surface(d, config).map(|r| r.report))
        .collect::<Result<Vec<_>>>()?;
    Ok(RunReport::new(config, reports))
}

/// Write `<dir>/<name>.stl` (ground-truth tessellation) and `<dir>/<name>.json`
/// (descriptor). Returns both paths.
pub fn cmd_generate(desc: &SurfaceDescriptor, dir: &Path, step: f64, format: MeshFormat) -> Result<(PathBuf, PathBuf)> {
    let surface = make_surface(desc)?;
    let ext = surface.extent();
    let count = |len: f64| ((len / step).round() as usize + 1).max(2);
    let mesh = surface.tessellate(count(ext.width()), count(ext.depth()))?;
    let name = surface_name(desc);
    let stl = dir.join(format!("{name}.stl"));
    let json = dir.join(format!("{name}.json"));
    io::write_mesh(&stl, &mesh, format)?;
    io::write_json(&json, desc)?;
    Ok((stl, json))
}

/// Load a surface from a descriptor JSON or an STL file.
pub fn load_surface(path: &Path) -> Result<GroundTruthSurface> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("json") => make_surface(&io::read_json::<SurfaceDescriptor>(path)?),
        _ => GroundTruthSurface::from_mesh(io::stl::read_stl(path)?),
    }
}

pub fn cmd_probe(surface_path: &Path, out: &Path, config: &PipelineConfig) -> Result<ContactGrid> {
    let noise = config.validate()?;
    let surface = load_surface(surface_path)?;
    let grid = probe_grid(&surface, config.spacing, &noise, &config.normal_source)?;
    io::write_bytes(out, io::csv::contacts_to_csv(&grid).as_bytes())?;
    Ok(grid)
}

pub fn cmd_reconstruct(contacts: &Path, density: usize, out: &Path, format: MeshFormat) -> Result<TriangleMesh> {
    let grid = io::csv::read_contacts(contacts)?;
    let patches = build_patch_grid(&grid)?;
    let mesh = tessellate(&patches, density)?;
    io::write_mesh(out, &mesh, format)?;
    Ok(mesh)
}

/// Evaluate a reconstruction file against a ground truth given as a
/// descriptor JSON (sampled over the reconstruction's footprint at
/// `gt_step`), an STL (its vertices) or a PLY cloud.
pub fn cmd_evaluate(
    mesh_path: &Path,
    ground_truth: &Path,
    gt_step: f64,
    icp: IcpParams,
    out: Option<&Path>,
) -> Result<MetricsReport> {
    let mesh = io::read_mesh(mesh_path)?;
    let is_json = ground_truth
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let reference = if is_json {
        let surface = make_surface(&io::read_json::<SurfaceDescriptor>(ground_truth)?)?;
        let (lo, hi) = mesh.xy_bounds().ok_or(Error::Empty("reconstruction mesh"))?;
        let ext = surface.extent();
        let region = Rect {
            min: [lo[0].max(ext.min[0]), lo[1].max(ext.min[1])],
            max: [hi[0].min(ext.max[0]), hi[1].min(ext.max[1])],
        };
        reference_cloud(&surface, region, gt_step)?
    } else {
        io::read_cloud(ground_truth)?
    };
    let metrics = evaluate(
        &mesh,
        &reference,
        &EvaluateOptions {
            icp,
            ..EvaluateOptions::default()
        },
    )?;
    if let Some(out) = out {
        io::write_json(out, &metrics)?;
    }
    Ok(metrics)
}

/// Chain the file-based stages for every configured surface under `dir`:
/// `<dir>/<name>/{<name>.stl, <name>.json, contacts.csv, reconstruction.ply,
/// metrics.json}` plus `<dir>/report.json`.
pub fn cmd_pipeline(config: &PipelineConfig, dir: &Path) -> Result<RunReport> {
    config.validate()?;
    let mut reports = Vec::with_capacity(config.surfaces.len());
    for desc in &config.surfaces {
        let name = surface_name(desc);
        let sub = dir.join(&name);
        let t0 = Instant::now();
        let (_, json) =
            cmd_generate(desc, &sub, config.generate_step, MeshFormat::StlBinary).map_err(|e| e.in_stage("generate"))?;
        let contacts_path = sub.join("contacts.csv");
        let contacts = cmd_probe(&json, &contacts_path, config).map_err(|e| e.in_stage("probe"))?;
        let t1 = Instant::now();
        let mesh_path = sub.join("reconstruction.ply");
        let mesh = cmd_reconstruct(&contacts_path, config.density, &mesh_path, MeshFormat::Ply)
            .map_err(|e| e.in_stage("reconstruct"))?;
        let t2 = Instant::now();
        let metrics = cmd_evaluate(&mesh_path, &json, config.gt_step(), config.icp, Some(&sub.join("metrics.json")))
            .map_err(|e| e.in_stage("evaluate"))?;
        let t3 = Instant::now();
        let ms = |a: Instant, b: Instant| (b - a).as_secs_f64() * 1e3;
        reports.push(SurfaceReport {
            name,
            rows: contacts.rows,
            cols: contacts.cols,
            patches: (contacts.rows - 1) * (contacts.cols - 1),
            triangles: mesh.triangles.len(),
            metrics,
            timings: config.record_timings.then(|| StageTimings {
                probe_ms: ms(t0, t1),
                reconstruct_ms: ms(t1, t2),
                evaluate_ms: ms(t2, t3),
            }),
        });
    }
    let report = RunReport::new(config, reports);
    io::write_json(&dir.join("report.json"), &report)?;
    Ok(report)
}
