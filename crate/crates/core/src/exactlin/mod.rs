//! Exact rational linear algebra.
//!
//! Everything in the combinatorial pipeline (subspace arrangements, crossing
//! solves, orientation determinants) runs over `Q` with arbitrary precision
//! integers, so no decision ever depends on rounding.

mod matrix;
mod snf;
mod subspace;

pub use matrix::{rational_to_string, RMatrix};
pub use snf::{smith_normal_form, SmithForm};
pub use subspace::Subspace;

use num_bigint::BigInt;
use num_rational::BigRational;

/// Arbitrary precision rational; always stored reduced with a positive denominator.
pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LinError {
    #[error("ambient dimension mismatch: {0} vs {1}")]
    AmbientMismatch(usize, usize),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("matrix is singular")]
    Singular,
}

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Dot product of two equal-length rational slices.
pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Rational::default();
    for (x, y) in a.iter().zip(b) {
        if x.numer().sign() != num_bigint::Sign::NoSign
            && y.numer().sign() != num_bigint::Sign::NoSign
        {
            acc += x * y;
        }
    }
    acc
}
