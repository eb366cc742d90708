use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("form order k = {k} is out of range for ambient dimension n = {n}")]
    OrderOutOfRange { k: usize, n: usize },

    #[error("index {0} is not a strictly increasing multi-index inside 1..=n")]
    BadMultiIndex(String),

    #[error("degenerate cell: frame matrix is rank deficient (sigma_min / sigma_max = {ratio:e})")]
    DegenerateCell { ratio: f64 },

    #[error("affine map is singular")]
    SingularMap,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("rank deficient Vandermonde matrix: rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("ill-conditioned system: condition number {condition:e} exceeds {limit:e}")]
    IllConditioned { condition: f64, limit: f64 },

    #[error("probe family is empty: no probe cell fits inside the body")]
    EmptyProbeFamily,

    #[error("point lies outside the domain: {0}")]
    OutsideDomain(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad input rather than by numerics.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::OrderOutOfRange { .. }
                | Error::BadMultiIndex(_)
                | Error::InvalidParameter(_)
                | Error::DimensionMismatch { .. }
                | Error::Json(_)
                | Error::Io(_)
        )
    }
}
