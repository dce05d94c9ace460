//! Scalar abstraction shared by every numeric quantity in the simulator
//! (lengths, durations, utilities, rates). Money is kept in integer cents
//! and is not generic.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Total order on scalars that are known not to be NaN.
#[inline]
pub(crate) fn total_cmp<S: Scalar>(a: S, b: S) -> std::cmp::Ordering {
    a.partial_cmp(&b).expect("NaN in ordered scalar comparison")
}
