use std::path::PathBuf;

/// Errors raised by the toolkit.
///
/// `Precondition` covers every violated input contract (bad grid size, out of
/// range exponents, malformed series). I/O and format problems are kept apart
/// so that front ends can map them to distinct exit codes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("grid mismatch: expected n = {expected}, found n = {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("field is not dealiased: mode {k:?} above kmax = {kmax} is nonzero")]
    NotDealiased { k: [i64; 3], kmax: usize },

    #[error("numerical instability at t = {time}: {detail}")]
    Unstable { time: f64, detail: String },

    #[error("flux {flux:e} is nonzero while its shell estimate vanishes")]
    FluxContradiction { flux: f64 },

    #[error("invalid format in {path}: {detail}")]
    Format { path: PathBuf, detail: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn pre(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, detail: impl Into<String>) -> Self {
        Error::Format { path: path.into(), detail: detail.into() }
    }

    /// True for errors caused by the filesystem or a malformed file rather
    /// than by invalid parameters.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::Format { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
