//! Scalar abstraction for the floating-point types the crate supports.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::AddAssign;

/// Floating-point scalar for rasters, estimators, and test statistics.
///
/// The trait bundles the `num-traits` capabilities the algorithms rely on;
/// it is sealed in practice by the two provided impls, `f32` and `f64`.
/// Constants and literals enter generic code through [`Real::of`], so all
/// tabulated coefficients are stored once in `f64`.
pub trait Real:
    num_traits::Float
    + num_traits::FloatConst
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + AddAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into this scalar type.
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("f64 constant must convert to the scalar type")
    }

    /// Converts a count into this scalar type.
    fn of_usize(value: usize) -> Self {
        Self::from_usize(value).expect("count must convert to the scalar type")
    }

    /// Converts this scalar into `f64` for output and bookkeeping.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("scalar must convert to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions_round_trip_for_both_precisions() {
        assert_eq!(f64::of(1.5), 1.5);
        assert_eq!(f32::of(1.5), 1.5f32);
        assert_eq!(f64::of_usize(9), 9.0);
        assert_eq!(f32::of_usize(9), 9.0f32);
        assert_eq!(2.5f32.to_f64_lossy(), 2.5);
    }
}
