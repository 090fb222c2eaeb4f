use thiserror::Error;

/// Errors raised by the weight toolkit.
///
/// Divergent integrals and unbounded constants are *not* errors; they are
/// ordinary result values ([`crate::weights::Integral::Divergent`],
/// [`crate::constants::Status::Diverged`]).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid interval [{a}, {b}]: need finite a < b")]
    InvalidInterval { a: f64, b: f64 },

    #[error("point {x} lies outside the weight's domain [{lo}, {hi}]")]
    OutsideDomain { x: f64, lo: f64, hi: f64 },

    #[error("interval [{a}, {b}] is not contained in the weight's domain [{lo}, {hi}]")]
    IntervalOutsideDomain { a: f64, b: f64, lo: f64, hi: f64 },

    #[error("weight is singular at {x}")]
    Singular { x: f64 },

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("tolerance {tol:e} not reached within {budget} subdivisions (estimate {estimate}, error {error:e})")]
    AtResolution {
        tol: f64,
        budget: usize,
        estimate: f64,
        error: f64,
    },

    #[error("root bracket not found below cap {cap}")]
    BracketNotFound { cap: f64 },

    #[error("factorization rejected: {0}")]
    Rejected(String),

    #[error("malformed grid set encoding: {0}")]
    Decode(String),
}

pub type Result<T> = std::result::Result<T, Error>;
