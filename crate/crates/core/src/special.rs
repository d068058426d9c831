//! Special functions. Evaluated in `f64` (statrs) and cast to the caller's
//! scalar type.

use statrs::function::{beta, gamma};

use crate::real::Real;

#[inline]
pub fn ln_gamma<T: Real>(x: T) -> T {
    T::lit(gamma::ln_gamma(x.as_f64()))
}

#[inline]
pub fn gamma_fn<T: Real>(x: T) -> T {
    T::lit(gamma::gamma(x.as_f64()))
}

/// Regularized lower incomplete gamma P(a, x); 0 for x ≤ 0.
pub fn gamma_p<T: Real>(a: T, x: T) -> T {
    if x <= T::zero() {
        return T::zero();
    }
    if x.is_infinite() {
        return T::one();
    }
    T::lit(gamma::gamma_lr(a.as_f64(), x.as_f64()))
}

/// Regularized upper incomplete gamma Q(a, x); 1 for x ≤ 0.
pub fn gamma_q<T: Real>(a: T, x: T) -> T {
    if x <= T::zero() {
        return T::one();
    }
    if x.is_infinite() {
        return T::zero();
    }
    T::lit(gamma::gamma_ur(a.as_f64(), x.as_f64()))
}

/// Regularized incomplete beta I_x(a, b), clamped to [0, 1] in x.
pub fn beta_reg<T: Real>(a: T, b: T, x: T) -> T {
    if x <= T::zero() {
        return T::zero();
    }
    if x >= T::one() {
        return T::one();
    }
    T::lit(beta::beta_reg(a.as_f64(), b.as_f64(), x.as_f64()))
}
