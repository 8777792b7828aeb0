use thiserror::Error;

/// Errors raised anywhere in the verification pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular: {0}")]
    Singular(String),
    #[error("non-finite evaluation: {0}")]
    Numerical(String),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("outside map domain: {0}")]
    MapDomain(String),
    #[error("solver failed: {0}")]
    Solve(String),
    #[error("not covered ({condition}) on piece {piece:?}{}", if *.refinable { ", refinable" } else { "" })]
    NotCovered {
        condition: String,
        /// Offending piece in model coordinates `[p_lo, p_hi, q_lo, q_hi]`.
        piece: [f64; 4],
        /// True when the enclosure merely failed to separate; false when a
        /// thin enclosure already violates the inequality.
        refinable: bool,
    },
    #[error("cone condition failed: {0}")]
    ConeFailure(String),
    #[error("incomplete input: {0}")]
    Incomplete(String),
    #[error("order error: {0}")]
    Order(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
