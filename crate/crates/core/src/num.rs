//! Scalar abstraction shared by the numeric kernels.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumCast};

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + NumCast + Debug + Display + Sum + Send + Sync + 'static
{
    fn lit(v: f64) -> Self {
        <Self as NumCast>::from(v).expect("literal representable in scalar type")
    }

    fn from_count(n: usize) -> Self {
        <Self as NumCast>::from(n).expect("count representable in scalar type")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
