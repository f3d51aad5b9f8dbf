//! Scalar abstraction for the floating-point math in this crate.
//!
//! Everything that is plain real arithmetic (Bloch rotations, likelihoods,
//! stochastic stepping, curve fits) is generic over [`Real`], so the same
//! code runs at `f32` or `f64`. The fixed-point estimator and the
//! simulation loops are deliberately concrete; see the crate root for the
//! `f64` aliases used there.

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use rand::distr::uniform::SampleUniform;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Types that can draw a standard normal variate.
///
/// This exists so `StandardNormal: Distribution<T>` can be carried as a
/// supertrait of [`Real`] instead of being repeated at every call site.
pub trait GaussianSample: Sized {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl<T> GaussianSample for T
where
    StandardNormal: Distribution<T>,
{
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
}

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + SampleUniform
    + GaussianSample
    + std::iter::Sum
    + std::fmt::Display
    + std::fmt::Debug
    + Send
    + Sync
    + 'static
{
    /// Shorthand for bringing an `f64` constant into the scalar type.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant must be representable")
    }

    /// Lossy conversion back to `f64` for error reporting and I/O.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
