use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("user count {k} exceeds the supported maximum {max}")]
    TooManyUsers { k: usize, max: usize },
    #[error("group {group} has no eigenvalue above the truncation threshold")]
    EmptyEigenbasis { group: usize },
    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eig:e})")]
    NotPsd { min_eig: f64 },
    #[error("channel matrix does not have full column rank")]
    RankDeficient,
    #[error("problem is infeasible: {0}")]
    Infeasible(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("wall-clock budget exceeded")]
    Timeout,
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
