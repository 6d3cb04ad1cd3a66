//! Continued fractions, worst divisors and Brjuno-type sums.

mod brjuno;
mod cf;
mod divisor;
pub mod modlin;
mod real;

pub use brjuno::{brjuno_partial, check_dyadic_sandwich, BrjunoSums, SandwichReport};
pub use cf::ContinuedFraction;
pub use divisor::{
    is_rational_pair, worst_divisor, worst_divisor_arg, worst_divisor_pair, worst_divisor_pair_brute, DivisorKind,
    PairDivisor, WorstDivisorTable,
};
pub use real::{Floor, Real, DEFAULT_BITS};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArithError {
    #[error("cannot parse real literal {0:?}")]
    Parse(String),
    #[error("partial quotients must be positive and non-empty")]
    BadQuotients,
    #[error("division by zero")]
    DivisionByZero,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precision exhausted at depth {requested}: safe depth is {safe_depth}")]
    PrecisionExhausted { requested: usize, safe_depth: usize },
    #[error("continued fraction too shallow: N = {n} but last denominator is {q_last}")]
    DepthInsufficient { n: u128, q_last: u128 },
    #[error("rational pair: |n alpha - beta| = {dist:e} at n = {k}")]
    RationalPair { k: i64, dist: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("denominator overflow beyond 128 bits at depth {0}")]
    DenominatorOverflow(usize),
}

/// Nearest-integer distance of a high-precision real.
pub fn nearest_int_dist(x: &Real) -> Real {
    x.nearest_int_dist()
}
