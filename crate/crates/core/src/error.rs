use thiserror::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors split into validation failures (bad inputs, malformed files)
/// and numerical failures (solver or iteration breakdown). The CLI maps
/// the former to exit code 2 and the latter to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside its documented domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Geometry or sampling too degenerate to continue.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Structured input violated the documented schema.
    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },

    /// File version field did not match a supported version.
    #[error("unsupported format version {found} (expected {expected})")]
    Version { expected: u32, found: u32 },

    /// Dimension mismatch between a model and its arguments.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An iterative routine failed to converge.
    #[error("no convergence: {context} (residual {residual:.3e})")]
    NoConvergence { context: String, residual: f64 },

    /// A linear solve or factorization failed.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }

    pub fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    /// True for input/validation errors (CLI exit code 2), false for
    /// numerical failures (exit code 3). IO and JSON errors count as
    /// validation: they surface from bad paths or malformed files.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::NoConvergence { .. } | Error::Numerical(_)
        )
    }
}
