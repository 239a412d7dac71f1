//! Exact arithmetic: rationals, Gaussian rationals, sparse Laurent polynomials
//! and sparse linear algebra over `Q(i)`.

mod matrix;
mod poly;
mod scalar;

pub use matrix::{RationalMatrix, Rref};
pub use poly::{var_name, LaurentPoly, Monomial};
pub use scalar::{
    parse_rational, rat, rat_int, rat_to_f64, rat_to_string, serde_rational, GaussianRational,
    Rational,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExactError {
    #[error("variable arity mismatch: {left} vs {right}")]
    ArityMismatch { left: usize, right: usize },
    #[error("pole at evaluation point (variable {var} is zero)")]
    Pole { var: String },
    #[error("antiderivative needs a logarithm (x^-1 term)")]
    LogarithmicAntiderivative,
}
