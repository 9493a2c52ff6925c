use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid of {points} points exceeds the cap of {cap}")]
    GridTooLarge { points: u128, cap: u128 },

    #[error("oracle unavailable: {0}")]
    OracleUnavailable(String),

    #[error("star-subgradient has norm {norm:e}, below the zero threshold")]
    ZeroSubgradient { norm: f64 },

    #[error("no m in 1..={m_max} satisfies the linesearch inequality")]
    LinesearchExhausted { m_max: u32 },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
}

impl Error {
    pub(crate) fn dim_mismatch(expected: usize, found: usize) -> Self {
        Error::InvalidArgument(format!(
            "dimension mismatch: expected {expected}, found {found}"
        ))
    }
}
