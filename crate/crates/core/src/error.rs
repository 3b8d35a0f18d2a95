use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("parse error on line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("unsupported cluster count k={k}: the degree of membership is only defined for k>1")]
    UnsupportedK { k: usize },

    #[error("degenerate cluster: gamma[{m}][{k}] is zero (zero-diameter cluster of duplicate points)")]
    DegenerateCluster { m: usize, k: usize },

    #[error("infinite odds: delta_T equals 1")]
    InfiniteOdds,

    #[error("infinite index: within-cluster sum of squares is zero")]
    InfiniteIndex,

    #[error("at k={k}: {source}")]
    AtK {
        k: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable short code used as the prefix of CLI error messages.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "E_INPUT",
            Error::NonFinite { .. } => "E_NONFINITE",
            Error::Parse { .. } => "E_PARSE",
            Error::UnsupportedK { .. } => "E_UNSUPPORTED_K",
            Error::DegenerateCluster { .. } => "E_DEGENERATE",
            Error::InfiniteOdds => "E_INFINITE_ODDS",
            Error::InfiniteIndex => "E_INFINITE_INDEX",
            Error::AtK { source, .. } => source.code(),
            Error::Io(_) => "E_IO",
            Error::Json(_) => "E_JSON",
        }
    }

    pub(crate) fn at_k(self, k: usize) -> Error {
        Error::AtK {
            k,
            source: Box::new(self),
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Error {
        Error::InvalidInput(msg.into())
    }
}
