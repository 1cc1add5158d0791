use thiserror::Error;

/// Errors raised by the algebra, the protocols and the attack.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("matrix order mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix must be square with positive order, got {rows} rows with row lengths {detail}")]
    NotSquare { rows: usize, detail: String },

    #[error("classical difference undefined: infinite entry at ({row}, {col})")]
    InfiniteEntry { row: usize, col: usize },

    #[error("integer overflow in fixed-width entry arithmetic")]
    Overflow,

    #[error("exponent must be a positive integer")]
    ZeroExponent,

    #[error("no repeating difference found within {steps} enumerated terms")]
    PeriodNotFound { steps: usize },

    #[error("attack gave up after {steps} enumerated terms ({retries} rejected periods)")]
    AttackFailed { steps: usize, retries: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
