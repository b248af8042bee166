//! Floating-point scalar abstraction shared by every estimator in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar: `f32` or `f64`.
///
/// Random sampling and simulation bookkeeping always run in `f64`; the
/// scalar type controls the precision of estimators and reported statistics.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` constant, rounding to the nearest representable value.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant converts to every Real")
    }

    #[inline]
    fn of_count(n: usize) -> Self {
        Self::from_usize(n).expect("count converts to every Real")
    }

    #[inline]
    fn of_u64(n: u64) -> Self {
        Self::from_u64(n).expect("u64 converts to every Real")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }

    /// Bracket width below which golden-section search stops.
    ///
    /// `f64` reaches 1e-6; `f32` bottoms out near the square root of its
    /// machine epsilon because the objective flattens at the optimum.
    fn search_tolerance() -> Self {
        Self::lit(1e-6).max(Self::epsilon().sqrt() * Self::lit(4.0))
    }
}

impl Real for f32 {}
impl Real for f64 {}
