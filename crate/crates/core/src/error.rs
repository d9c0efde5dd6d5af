// SPDX-License-Identifier: Apache-2.0

use crate::systems::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The stability hypothesis (Hurwitz plant) does not hold.
    #[error("matrix is not Hurwitz: eigenvalue {re}{im:+}i has non-negative real part")]
    NotHurwitz { re: f64, im: f64 },

    #[error("{0} spans a zero-dimensional space; no reduction is possible")]
    ZeroSpace(&'static str),

    #[error("projection basis does not contain the reachability space: residual {residual:e} at level {level}")]
    SpanMismatch { level: usize, residual: f64 },

    #[error("left inverse check failed: |Vinv V - I|_max = {0:e}")]
    NotLeftInverse(f64),

    #[error("enumeration of {count} Markov parameters exceeds the budget of {cap}")]
    Budget { count: u128, cap: usize },

    #[error("requested order {requested} is infeasible: the smallest reachability space already has dimension {minimum}")]
    Infeasible { requested: usize, minimum: usize },

    #[error("V^T P V is numerically singular (reciprocal condition {rcond:e})")]
    Conditioning { rcond: f64 },

    /// A guaranteed property failed to hold numerically.
    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("sequence length mismatch: {0}")]
    LengthMismatch(String),

    #[error("BFR undefined: reference output is constant")]
    UndefinedBfr,

    #[error("validation failed: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

impl Error {
    pub(crate) fn dim(context: &'static str, expected: impl ToString, actual: impl ToString) -> Self {
        Error::Dimension {
            context,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}
