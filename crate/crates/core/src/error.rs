use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid sign mask: {0}")]
    InvalidMask(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dual variable alpha[{index}] = {value} lies outside [0, 1]")]
    AlphaOutOfBox { index: usize, value: f64 },

    #[error("duality gap {gap:e} is negative beyond the numerical floor")]
    NegativeGap { gap: f64 },

    #[error("non-finite objective at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("line search invariant violated: {0}")]
    LineSearch(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("oracle precondition failed: {0}")]
    Oracle(String),

    #[error("cannot access {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
