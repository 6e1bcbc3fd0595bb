use thiserror::Error;

use crate::algebra::ValidationReport;

/// Errors raised by the filling engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("manifold spec failed validation:\n{0}")]
    Validation(Box<ValidationReport>),

    #[error("MAX_NONPOSITIVE: best value of min eigenvalue of S(H) on the unit sphere is {best:e}")]
    MaxNonpositive { best: f64 },

    #[error("PROPORTIONALITY_VIOLATION: symmetrized ad(H) is not block proportional (relative residual {residual:e})")]
    ProportionalityViolation { residual: f64 },

    #[error("cone margin must lie in (0, 1), got {0}")]
    InvalidMargin(f64),

    #[error("DEGENERATE_GEODESIC: point lies on M0 x N (|H| = {norm:e})")]
    DegenerateGeodesic { norm: f64 },

    #[error("FRAME_NOT_ORTHONORMAL: residual {residual:e}")]
    FrameNotOrthonormal { residual: f64 },

    #[error("FRAME_NOT_NORMAL_TO_GEODESIC: residual {residual:e}")]
    FrameNotNormalToGeodesic { residual: f64 },

    #[error("frame of size {size} is below the euclidean rank {rank}")]
    FrameTooSmall { size: usize, rank: usize },

    #[error("NOT_A_CYCLE: chain of dimension {dim} has nonzero boundary")]
    NotACycle { dim: usize },

    #[error("APEX_OFF_SLICE: {0}")]
    ApexOffSlice(String),

    #[error("RANK_RANGE: cycle dimension {k} outside [{rank}, {dim})")]
    RankRange { k: usize, rank: usize, dim: usize },

    #[error("chains of dimension {left} and {right} cannot be combined")]
    ChainDimension { left: usize, right: usize },

    #[error("unsupported cell: {0}")]
    UnsupportedCell(String),

    #[error("eigenvalue {value} below the cone threshold {threshold}")]
    EigenvalueBelowThreshold { value: f64, threshold: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error in {source_name}: {message}")]
    Parse { source_name: String, message: String },

    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Whether the error is a numeric failure of the structure theory (as
    /// opposed to malformed input).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::MaxNonpositive { .. } | Error::ProportionalityViolation { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
