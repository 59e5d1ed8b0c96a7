use std::path::PathBuf;

/// Errors raised by the graph, filter, dataset and training routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument lies outside its documented domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Two operands have incompatible dimensions.
    #[error("shape mismatch in {op}: expected {expected}, got {actual}")]
    Shape {
        op: &'static str,
        expected: String,
        actual: String,
    },

    /// A caller broke a documented precondition (e.g. a non-symmetric matrix).
    #[error("contract violation: {0}")]
    Contract(String),

    /// An iterative method failed or produced non-finite values.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Malformed dataset, checkpoint or graph file content.
    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(op: &'static str, expected: impl ToString, actual: impl ToString) -> Self {
        Error::Shape {
            op,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
