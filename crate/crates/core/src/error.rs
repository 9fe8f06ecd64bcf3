//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("continued fraction failed to converge after {0} iterations")]
    NonConvergence(usize),

    #[error("empty sample")]
    EmptySample,

    #[error(
        "PIT value at index {index} is exactly {value}; the Cauchy transform would be infinite. \
         Compute PITs from parametric observation CDFs (with randomization for discrete models) \
         to avoid exact 0/1 values"
    )]
    BoundaryValue { index: usize, value: f64 },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error(
        "degenerate p-value {value} at index {index}; the Cauchy transform is infinite. \
         Use parametric-CDF PITs to avoid p-values of exactly 0 or 1"
    )]
    DegenerateP { index: usize, value: f64 },

    #[error("non-finite input at index {0}")]
    NonFiniteInput(usize),

    #[error("gamma {gamma} outside [0, {max}]")]
    GammaOutOfRange { gamma: f64, max: f64 },

    #[error("index map length {got} does not match sample size {expected}")]
    IndexMismatch { expected: usize, got: usize },

    #[error("tied or degenerate order statistics for pair ({i}, {j})")]
    TieError { i: usize, j: usize },

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("replicate {replicate} failed: {source}")]
    Replicate {
        replicate: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(
        "error budget exceeded: {failures} replicate failures (budget {budget}); first: {first}"
    )]
    ErrorBudget {
        failures: usize,
        budget: usize,
        first: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
