use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("shape error: {0}")]
    Shape(String),
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian")]
    NotHermitian,
    #[error("matrix is not positive semidefinite")]
    NotPsd,
    #[error("matrix is not invertible")]
    Singular,
    #[error("{0} is not available on the exact backend")]
    ExactBackend(&'static str),
    #[error("range inclusion fails: no Douglas factor exists")]
    NoFactor,
    #[error("expected a nonzero vector")]
    ZeroVector,
    #[error("retry budget exhausted while generating {0}")]
    RetryBudget(&'static str),
    #[error("unsupported request: {0}")]
    Unsupported(String),
    #[error("map does not induce a line map: image has rank {rank}")]
    NotRankOne { rank: usize },
    #[error("degenerate probe images: {0}")]
    Degenerate(String),
    #[error("line map is not semilinear: {0}")]
    NotSemilinear(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
