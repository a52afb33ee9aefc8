//! Exact arithmetic around torsion points of abelian varieties: explicit
//! bounds, a finite model of torsion cosets, orbit density analysis over
//! finite fields, and idempotent lifting in split semisimple algebras.

pub mod algebra;
pub mod acceptance;
pub mod arith;
pub mod bounds;
pub mod caps;
pub mod error;
pub mod linalg;
pub mod orbit;
pub mod oracle;
pub mod scalar;
pub mod serde_util;
pub mod snf;
pub mod torsion;

pub use caps::Caps;
pub use error::{Error, Result};

/// Exact rational scalar used throughout.
pub type Rational = num_rational::BigRational;
/// Dense rational matrix.
pub type QMatrix = linalg::Matrix<Rational>;
/// Floating scalar for bound comparators.
pub type Real = f64;
