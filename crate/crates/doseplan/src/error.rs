use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),

    /// A material hypothesis (H-1..H-3) is violated.
    #[error("material hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("invalid closure input: {0}")]
    Closure(String),

    #[error("CFL violation: dt = {dt} exceeds limit {limit}")]
    Cfl { dt: f64, limit: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("solver error: {0}")]
    Solver(String),

    /// Guard against accidentally running the discrete-ordinates oracle at
    /// production resolution.
    #[error("resource guard: {0}")]
    ResourceGuard(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
