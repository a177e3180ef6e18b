use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mode {mode} out of range for an order-{order} tensor")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid tensor: {0}")]
    InvalidTensor(String),

    #[error("input contains non-finite values")]
    NonFinite,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not symmetric (max deviation {deviation:e})")]
    NotSymmetric { deviation: f64 },

    #[error("column {column} of the left factor is identically zero")]
    ZeroColumn { column: usize },

    #[error("invalid TT decomposition: {0}")]
    InvalidTt(String),

    #[error("invalid CP decomposition: {0}")]
    InvalidCp(String),

    #[error("{kernel} kernel requires order-{expected} tensors, got order {found}")]
    UnsupportedOrder {
        kernel: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid label {0} (labels must be -1 or +1)")]
    InvalidLabel(i64),

    #[error("class {0:+} is absent from the data")]
    MissingClass(i8),

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: Vec<u8> },

    #[error("unsupported format version {0}")]
    BadVersion(u16),

    #[error("file truncated while reading {0}")]
    Truncated(&'static str),

    #[error("payload mismatch: header declares {expected} values, file holds {found}")]
    PayloadMismatch { expected: usize, found: usize },

    #[error("manifest error at line {line}: {message}")]
    Manifest { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable identifier, used by the CLI's error line.
    pub fn code(&self) -> &'static str {
        match self {
            Error::ModeOutOfRange { .. } => "mode-out-of-range",
            Error::DimensionMismatch(_) => "dimension-mismatch",
            Error::InvalidTensor(_) => "invalid-tensor",
            Error::NonFinite => "non-finite",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::NotSymmetric { .. } => "not-symmetric",
            Error::ZeroColumn { .. } => "zero-column",
            Error::InvalidTt(_) => "invalid-tt",
            Error::InvalidCp(_) => "invalid-cp",
            Error::UnsupportedOrder { .. } => "unsupported-order",
            Error::InvalidLabel(_) => "invalid-label",
            Error::MissingClass(_) => "missing-class",
            Error::BadMagic { .. } => "bad-magic",
            Error::BadVersion(_) => "bad-version",
            Error::Truncated(_) => "truncated",
            Error::PayloadMismatch { .. } => "payload-mismatch",
            Error::Manifest { .. } => "manifest",
            Error::Io(_) => "io",
        }
    }
}
