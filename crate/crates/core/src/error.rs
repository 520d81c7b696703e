use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Grid or solver parameters outside their admissible range.
    #[error("configuration error: {0}")]
    Config(String),

    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// NaN or infinity in a field that must be finite.
    #[error("non-finite value in {what} at grid index {index}")]
    NonFinite { what: &'static str, index: usize },

    /// The time integration produced non-finite values.
    #[error("numerical abort at step {step} (t = {t}): {reason}")]
    NumericAbort { step: u64, t: f64, reason: String },

    /// Binary snapshot did not match the expected layout.
    #[error("snapshot format error in `{field}`: {detail}")]
    Format { field: &'static str, detail: String },

    /// JSON run configuration failed validation.
    #[error("config error at `{path}`: {message}")]
    ConfigParse { path: String, message: String },

    #[error("I/O error on {path}: {source}")]
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
