//! Cubical de Rham calculus on finite models.
//!
//! Exact polynomial differential forms on cubes, the cube category, cubic sets
//! and their subdivisions, a numeric partition-of-unity constructor and a
//! rational cohomology engine for cubical models with face identifications.

pub mod cohomology;
pub mod cube_cat;
pub mod cubicalset;
pub mod exterior;
pub mod hurewicz;
pub mod linalg;
pub mod model;
pub mod poly;
pub mod polyform;
pub mod pou;
pub mod quadrature;
pub mod random;
pub mod rng;
pub mod shipped;

mod error;

pub use error::{Error, Result};

use num_bigint::BigInt;
use num_rational::BigRational;

/// Exact scalar used by every symbolic routine.
pub type Q = BigRational;

/// Shorthand for the rational `n/d`.
pub fn q(n: i64, d: i64) -> Q {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Shorthand for an integer as a rational.
pub fn qi(n: i64) -> Q {
    BigRational::from_integer(BigInt::from(n))
}

pub(crate) fn q_to_f64(x: &Q) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}
