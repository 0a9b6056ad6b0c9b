use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("matrix is not symmetric (|a[{i}][{j}] - a[{j}][{i}]| = {gap:e})")]
    NotSymmetric { i: usize, j: usize, gap: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("dataset has no ordering key")]
    MissingOrderKey,

    #[error("design matrix is rank deficient: {0}")]
    RankDeficient(Box<Error>),

    #[error("residuals are identically zero; the empirical bridge is undefined")]
    DegenerateResiduals,

    #[error("argument {0} is outside [0, 1]")]
    OutOfDomain(f64),

    #[error("degrees of freedom d = {d} must satisfy 1 <= d <= n - 1 = {}", .n.saturating_sub(1))]
    InvalidDegrees { d: usize, n: usize },

    #[error(
        "grid covariance matrix Q is singular for d = {d} ({source}); \
         try a smaller d or check the design for degenerate covariates"
    )]
    SingularCovariance { d: usize, source: Box<Error> },

    #[error("invalid model spec: {0}")]
    InvalidSpec(String),

    #[error("unsupported model spec: {0}")]
    UnsupportedSpec(String),

    #[error("replicate {index}: {source}")]
    Replicate { index: usize, source: Box<Error> },
}

impl Error {
    /// True for failures caused by the data being statistically degenerate
    /// (as opposed to malformed input).
    pub fn is_degeneracy(&self) -> bool {
        match self {
            Error::NotPositiveDefinite { .. }
            | Error::RankDeficient(_)
            | Error::DegenerateResiduals
            | Error::SingularCovariance { .. } => true,
            Error::Replicate { source, .. } => source.is_degeneracy(),
            _ => false,
        }
    }
}
