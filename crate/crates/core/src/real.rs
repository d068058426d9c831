//! Scalar abstraction shared by every numeric module.
//!
//! The laboratory runs in `f64` by default, but all of the math is written
//! against [`Real`] so that an `f32` build (or any other float that can host
//! the sampling hooks below) works without code changes.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumCast};
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, Open01, StandardNormal};

/// floating point scalar: f32 or f64
pub trait Real:
    Float + FloatConst + FromPrimitive + NumCast + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Prepared unit-scale Gamma sampler.
    type GammaSampler: Distribution<Self> + Clone + Debug + Send + Sync;

    fn gamma_sampler(shape: Self) -> Self::GammaSampler;

    fn sample_exp1<R: Rng + ?Sized>(rng: &mut R) -> Self;

    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Uniform on the open interval (0, 1).
    fn sample_open01<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Converts an `f64` literal. Never fails for the float types we support.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite float converts to f64")
    }
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            type GammaSampler = Gamma<$t>;

            #[inline]
            fn gamma_sampler(shape: $t) -> Gamma<$t> {
                Gamma::new(shape, 1.0).expect("positive gamma shape")
            }

            #[inline]
            fn sample_exp1<R: Rng + ?Sized>(rng: &mut R) -> $t {
                Exp1.sample(rng)
            }

            #[inline]
            fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> $t {
                StandardNormal.sample(rng)
            }

            #[inline]
            fn sample_open01<R: Rng + ?Sized>(rng: &mut R) -> $t {
                Open01.sample(rng)
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);
