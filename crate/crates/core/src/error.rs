use alloc::string::String;

/// Errors raised by the registration pipeline and its building blocks.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(&'static str),
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("invalid point cloud: {0}")]
    InvalidCloud(String),
    #[error("invalid transform: {0}")]
    InvalidTransform(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("no ground points left after segmentation")]
    NoGroundPoints,
    #[error("source and target share no non-ground semantic label")]
    EmptyOverlap,
    #[error("descriptor dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("group size {k} exceeds the {available} available correspondences")]
    GroupTooSmall { k: usize, available: usize },
    #[error("seed row of the consistency matrix is entirely zero")]
    AllZeroRow,
    #[error("no candidate transform survived outlier removal")]
    NoCandidates,
    #[error("too few points: {0}")]
    TooFewPoints(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
