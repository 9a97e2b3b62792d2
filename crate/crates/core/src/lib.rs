//! Surface reconstruction from sparse tactile contacts.
//!
//! A probe touches an unknown heightfield on a regular grid and reports the
//! contact point plus the local surface normal, either directly or through a
//! static IMU trace fused by a gradient-descent orientation filter. Pairs of
//! neighbouring contacts yield off-surface control points; each grid cell
//! becomes a biquadratic patch; the patchwork is tessellated and compared
//! with the ground truth after ICP alignment.
//!
//! ```
//! use haptic_surface::prelude::*;
//!
//! let surface = make_surface(&SurfaceDescriptor::builtin("surface1")).unwrap();
//! let grid = probe_grid(&surface, 20.0, &NoiseSpec::noiseless(), &NormalSource::Oracle).unwrap();
//! let patches = build_patch_grid(&grid).unwrap();
//! let mesh = tessellate(&patches, 10).unwrap();
//! assert_eq!(patches.len(), 16);
//! assert!(!mesh.is_empty());
//! ```

pub type Vec3 = nalgebra::Vector3<f64>;

pub mod cli;
pub mod curvature;
pub mod error;
pub mod io;
pub mod madgwick;
pub mod mesh;
pub mod metrics;
pub mod nurbs;
pub mod pipeline;
pub mod probe;
pub mod quaternion;
pub mod surface;

pub use error::{Error, Result};

/// Common imports for examples and downstream code.
pub mod prelude {
    pub use crate::curvature::{control_point, ControlPoint};
    pub use crate::error::{Error, Result};
    pub use crate::madgwick::{
        calibrate, correct_reading, estimate_orientation, filter_update, normal_from_orientation, CalibrationState,
        FilterParams, FilterState, ImuReading,
    };
    pub use crate::mesh::{PointCloud, RigidTransform, TriangleMesh};
    pub use crate::metrics::{
        cloud_to_cloud, cloud_to_mesh, evaluate, hausdorff, icp_align, EvaluateOptions, IcpParams, IcpTarget,
        MetricsReport,
    };
    pub use crate::pipeline::{run_pipeline, run_surface, PipelineConfig, RunReport};
    pub use crate::nurbs::{build_patch_grid, evaluate_patch, tessellate, NurbsPatch, PatchGrid};
    pub use crate::probe::{probe_grid, ContactGrid, ContactSample, ImuProbeConfig, NoiseSpec, NormalSource};
    pub use crate::quaternion::{quat_from_accel, quat_z_rotation, rotate_vector, Quaternion};
    pub use crate::surface::{make_surface, GroundTruthSurface, SurfaceDescriptor};
    pub use crate::Vec3;
}
