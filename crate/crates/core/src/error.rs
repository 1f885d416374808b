use thiserror::Error;

/// Errors raised by the pushing toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),

    #[error("polygon has zero area")]
    DegeneratePolygon,

    #[error("polygon edges {0} and {1} intersect")]
    SelfIntersecting(usize, usize),

    #[error("arc step {arc_step} must be positive and shorter than the shortest edge ({shortest_edge})")]
    InvalidArcStep { arc_step: f64, shortest_edge: f64 },

    #[error("contact (segment {segment}, offset {offset}) is not on the contour")]
    ContactNotOnContour { segment: usize, offset: f64 },

    #[error("contour index {index} out of range for {len} samples")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid object state: {0}")]
    InvalidState(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown object '{0}'")]
    UnknownObject(String),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("failed to parse shape file: {0}")]
    ShapeFile(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
