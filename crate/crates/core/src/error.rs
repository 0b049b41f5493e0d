use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad magic in {0}")]
    BadMagic(PathBuf),

    #[error("truncated file {path}: expected {expected} bytes, found {found}")]
    Truncated {
        path: PathBuf,
        expected: u64,
        found: u64,
    },

    #[error("inconsistent header in {path}: {reason}")]
    InconsistentHeader { path: PathBuf, reason: String },

    #[error("non-finite data")]
    NonFinite,

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("incomplete corpus: {0}")]
    IncompleteCorpus(String),

    #[error("dangling path in manifest: {0}")]
    DanglingPath(PathBuf),

    #[error("malformed JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("layer {layer}, head {head}, sample {sample_id}: {source}")]
    Sample {
        layer: usize,
        head: usize,
        sample_id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("degenerate output (all singular values are zero)")]
    DegenerateOutput,

    #[error("covariance undefined for vectors of length {0}")]
    CovarianceUndefined(usize),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("sample sets differ across heads: {0}")]
    MismatchedSamples(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("PageRank did not converge after {iterations} iterations (residual {residual:e} > {epsilon:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        epsilon: f64,
        last: Vec<f64>,
    },

    #[error("singular linear system")]
    SingularSystem,

    #[error("numerical breakdown: {0}")]
    Numerical(String),

    #[error("undefined correlation (zero rank variance)")]
    UndefinedCorrelation,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Coarse classification used by front ends to pick exit codes.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::DegenerateOutput
            | Error::NonConvergence { .. }
            | Error::SingularSystem
            | Error::Numerical(_)
            | Error::UndefinedCorrelation
            | Error::CovarianceUndefined(_) => true,
            Error::Sample { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
