use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Gram determinant below tolerance, or a non-positive Cholesky pivot.
    #[error("matrix is rank deficient (Gram determinant below 1e-12)")]
    RankDeficient,

    #[error("vector is orthogonal to the subspace; projection is degenerate")]
    DegenerateProjection,

    #[error("domain error: {0}")]
    Domain(String),

    /// The extreme-value estimate is outside its asymptotic regime.
    #[error("closed-form estimate invalid for K={k}, beam m={m}: log argument {argument:.6} <= 1")]
    InvalidRegime { k: u32, m: u32, argument: f64 },

    #[error("empty input")]
    EmptyInput,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
