use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("degenerate cell: |det| of pair {pair} is {abs_det:e}, at or below the floor")]
    DegenerateCell { pair: usize, abs_det: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("amplitude law is not unit-power: empirical E[|x|^2] = {second_moment:.4}")]
    NotUnitPower { second_moment: f64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
