use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid axis: {0}")]
    InvalidAxis(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid layout: {0}")]
    InvalidLayout(String),

    #[error("kernel produced a line of length {got}, expected {expected}")]
    LineLengthMismatch { expected: usize, got: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("spline needs at least 4 points, got {0}")]
    SplineTooShort(usize),

    #[error("non-finite value after sub-step `{0}`")]
    NonFinite(String),

    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error("allocation tracking is not active; install `TrackingAllocator` as the global allocator")]
    AllocTrackingInactive,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
