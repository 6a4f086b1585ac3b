use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed mesh at {location}: {message}")]
    MalformedMesh { location: String, message: String },

    #[error("unsupported mesh format: {0}")]
    UnsupportedFormat(String),

    #[error("mesh has no faces left after dropping {degenerate} degenerate faces")]
    EmptyMesh { degenerate: usize },

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch for {what}: expected {expected}, got {actual}")]
    Dimension {
        what: String,
        expected: usize,
        actual: usize,
    },

    #[error("zero-magnitude vector: {0}")]
    ZeroMagnitude(&'static str),

    #[error("weights container: {0}")]
    Weights(String),

    #[error("image encoding failed: {0}")]
    Image(String),
}
