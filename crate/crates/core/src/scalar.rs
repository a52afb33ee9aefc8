//! Scalar traits the generic routines are written against.

use std::fmt::Debug;
use std::ops::Neg;

use num_traits::{Float, Num};

/// An exact field: every nonzero element is invertible and equality is exact.
///
/// Gaussian elimination in [`crate::linalg`] tests pivots against zero, so
/// only exact types (rationals over `BigInt`, `i64`, `i128`) belong here.
pub trait Field: Num + Neg<Output = Self> + Clone + Debug {}

impl<T> Field for T where T: Num + Neg<Output = T> + Clone + Debug {}

/// Round a non-negative real upward by at least one unit in the last place.
///
/// Used before comparing an exact integer against a floating-point bound so
/// that rounding in the bound can only make the comparison more lenient by
/// one ulp, never stricter.
pub fn guard_up<F: Float>(v: F) -> F {
    if v.is_infinite() || v.is_nan() {
        return v;
    }
    let step = v.abs() * F::epsilon();
    if step > F::zero() {
        v + step
    } else {
        v + F::min_positive_value()
    }
}

/// `true` when the integer `n` is at most the real bound `bound`, after the
/// bound has been rounded up by [`guard_up`].
pub fn int_le_real<F: Float>(n: u64, bound: F) -> bool {
    match F::from(n) {
        Some(nf) => nf <= guard_up(bound),
        None => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn guard_moves_up() {
        assert!(guard_up(1.0f64) > 1.0);
        assert!(guard_up(1.0f32) > 1.0);
        assert!(guard_up(0.0f64) > 0.0);
        assert!(int_le_real(7, 7.0f64));
        assert!(!int_le_real(8, 7.5f64));
    }
}
