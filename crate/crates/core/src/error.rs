use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid cell size must be positive, got {0}")]
    NonPositiveCellSize(f64),

    #[error("degenerate world bounds")]
    DegenerateBounds,

    #[error("no path from {start:?} to {goal:?}")]
    NoPath { start: [f64; 3], goal: [f64; 3] },

    #[error("path endpoint {0:?} lies in an occupied cell")]
    OccupiedEndpoint([f64; 3]),

    #[error("arc length {s} outside [0, {length}]")]
    ArcLengthOutOfRange { s: f64, length: f64 },

    #[error("connectivity violation at t={t:.3}s: lambda2={lambda2:.3e} <= floor {floor:.3e}")]
    ConnectivityViolation { t: f64, lambda2: f64, floor: f64 },

    #[error("anchor violation at t={t:.3}s: robot {robot} is {distance:.4} m from its target (radius {radius})")]
    AnchorViolation {
        t: f64,
        robot: usize,
        distance: f64,
        radius: f64,
    },

    #[error("non-finite force on robot {robot} at t={t:.3}s")]
    NonFiniteForce { t: f64, robot: usize },

    #[error("initial graph is not connected (lambda2={0:.3e})")]
    InitiallyDisconnected(f64),

    #[error("empty group: {0}")]
    EmptyGroup(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for faults that the CLI maps to exit code 2.
    pub fn is_safety_fault(&self) -> bool {
        matches!(
            self,
            Error::ConnectivityViolation { .. }
                | Error::AnchorViolation { .. }
                | Error::NonFiniteForce { .. }
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
