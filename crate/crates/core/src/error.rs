use thiserror::Error;

use crate::modelspace::SpaceId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("space mismatch: expected {expected}, found {found}")]
    SpaceMismatch { expected: SpaceId, found: SpaceId },

    #[error("invalid point in {space}: {reason}")]
    InvalidPoint { space: SpaceId, reason: String },

    #[error("invalid tangent vector: {0}")]
    InvalidTangent(String),

    #[error("minimizing geodesic is not unique{}: distance {distance} reaches radius {radius}",
        segment.map(|s| format!(" on segment {s}")).unwrap_or_default())]
    NonUniqueGeodesic {
        segment: Option<usize>,
        distance: f64,
        radius: f64,
    },

    #[error("invalid isometry: {0}")]
    InvalidIsometry(String),

    #[error("invalid group: {0}")]
    InvalidGroup(String),

    #[error("group has no fold strategy")]
    NoFoldStrategy,

    #[error("fold did not reach the chamber within {steps} reflections")]
    FoldFailure { steps: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("parameter {value} outside [{start}, {end}]")]
    ParameterOutOfRange { value: f64, start: f64, end: f64 },

    #[error("invalid shortening configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid foliation: {0}")]
    InvalidFoliation(String),

    #[error("segment is not horizontal: leaf component {0:e}")]
    NotHorizontal(f64),

    #[error("curve endpoints are not on the same leaf (residual {0:e})")]
    NotSameLeaf(f64),

    #[error("foliation has no transverse direction")]
    NoTransverseDirection,

    #[error("no oracle available: {0}")]
    NoOracle(String),

    #[error("{0}")]
    Unsupported(String),
}
