use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("usage: {0}")]
    Usage(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("calibration needs at least one static reading")]
    EmptyCalibration,

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("grid point ({x:.3}, {y:.3}) lies outside the surface extent")]
    OutsideExtent { x: f64, y: f64 },

    #[error("control point for contacts {a:?} -> {b:?}: {source}")]
    ControlPoint {
        a: (usize, usize),
        b: (usize, usize),
        #[source]
        source: Box<Error>,
    },

    #[error("incomplete contact grid: {0}")]
    IncompleteGrid(String),

    #[error("{path}: line {line}: {msg}")]
    Parse {
        path: String,
        line: u64,
        msg: String,
    },

    #[error("{0}")]
    Format(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Process exit code for the command-line front end: 1 for usage
    /// errors, 2 for data and format problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Degenerate(_) | Error::ControlPoint { .. } => 3,
            Error::Stage { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}
