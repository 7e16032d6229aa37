use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the shape-model pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("distance-field gradient vanishes at ({0:.6}, {1:.6}, {2:.6})")]
    DegenerateGradient(f64, f64, f64),

    #[error("narrow band of half-width {0} contains no voxels")]
    EmptyBand(f64),

    #[error("invalid semi-axis {axis}: must exceed two voxel spacings ({min})")]
    InvalidAxis { axis: f64, min: f64 },

    #[error("format error: {0}")]
    Format(String),

    #[error("format error in {path}: {message}")]
    FormatAt { path: PathBuf, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("dipole offset must be positive, got {0}")]
    InvalidBand(f64),

    #[error("dipole sites {0} and {1} coincide")]
    DuplicateSite(usize, usize),

    #[error("RBF system of size {size} is singular")]
    SingularSystem { size: usize },

    #[error("RBF system of size {size} exceeds the configured maximum {max}")]
    SystemTooLarge { size: usize, max: usize },

    #[error("no sign change of the implicit function on the sampling lattice")]
    EmptyIsosurface,

    #[error("cohort mean is not available before the second epoch")]
    MeanUnavailable,

    #[error("covariance floor must be positive when the batch cannot span the shape space")]
    NonPositiveFloor,

    #[error("cohort of {0} shapes is too small for this operation")]
    DegenerateCohort(usize),

    #[error("model has zero total variance")]
    ZeroVariance,

    #[error("mesh has no triangles")]
    EmptyMesh,

    #[error("invalid argument: {0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
