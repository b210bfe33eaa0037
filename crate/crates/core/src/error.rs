use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration or schema invariant does not hold.
    #[error("invalid config: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("bucket {bucket} out of range for {buckets} buckets")]
    InvalidBucket { bucket: usize, buckets: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("single-class dataset: every label is {0}")]
    SingleClass(u8),

    #[error("curve is not monotone non-decreasing at bucket {0}")]
    NonMonotoneCurve(usize),

    #[error("model schema does not match allocation schema")]
    SchemaMismatch,

    #[error("requested_traffic called for a {0:?} item")]
    WrongRegion(crate::domain::Region),

    #[error("unknown item id {0}")]
    UnknownItem(crate::domain::ItemId),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by configuration rather than input data.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::SchemaMismatch)
    }
}
