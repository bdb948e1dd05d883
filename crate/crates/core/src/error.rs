use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported space: {0}")]
    UnsupportedSpace(String),

    #[error("unsupported space pair: {0}")]
    UnsupportedPair(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("interface mesh is not aligned with the domain mesh: {0}")]
    Misaligned(String),

    #[error("factorization failed{}", match .pivot { Some(p) => format!(" at pivot {p}"), None => String::new() })]
    FactorizationFailure { pivot: Option<usize> },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("eigenvalue computation failed: {0}")]
    Eigen(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
