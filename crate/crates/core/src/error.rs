use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is singular or orientation-reversing (det = {det:.3e})")]
    SingularOrInverted { det: f64 },

    #[error("rotation angle too close to pi for a unique logarithm (trace = {trace:.9})")]
    NearPiRotation { trace: f64 },

    #[error("matrix is singular (det = {det:.3e})")]
    SingularMatrix { det: f64 },

    #[error("degenerate triangle{} (area = {area:.3e})", face_suffix(*face))]
    DegenerateTriangle { face: Option<usize>, area: f64 },

    #[error("topology mismatch: {0}")]
    TopologyMismatch(String),

    #[error("inverted triangle at face {face}")]
    InvertedTriangle { face: usize },

    #[error("blend neighbor {index}: {source}")]
    Neighbor {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid camera: {0}")]
    InvalidCamera(String),

    #[error("loss diverged at iteration {iteration}: term `{term}` is not finite")]
    DivergedLoss { iteration: usize, term: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("face at line {line} has {count} vertices; only triangles are supported")]
    NonTriangleFace { line: usize, count: usize },

    #[error("invalid surfel set: {0}")]
    InvalidSurfelSet(String),

    #[error("invalid config: {0}")]
    Config(String),

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

    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

fn face_suffix(face: Option<usize>) -> String {
    face.map(|f| format!(" at face {f}")).unwrap_or_default()
}

impl Error {
    pub(crate) fn neighbor(index: usize, source: Error) -> Self {
        Error::Neighbor {
            index,
            source: Box::new(source),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end.
    ///
    /// 2 for bad input, 3 for numerical divergence. Self-test failures are
    /// reported through the self-test report, not through an error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DivergedLoss { .. } => 3,
            Error::Neighbor { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}
