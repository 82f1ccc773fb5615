//! The floating-point abstraction shared by the numeric modules.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar used by the channel math, the network and the solvers.
///
/// Implemented for `f32` and `f64`. `Display`/`FromStr` are required so that
/// parameter dumps round-trip losslessly (Rust prints the shortest decimal
/// that parses back to the same value).
pub trait Scalar:
    'static
    + Send
    + Sync
    + Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + FromStr
{
    /// Tolerance used when checking that probability vectors sum to one.
    fn probability_tolerance() -> Self {
        let floor = Self::from_f64(1e-12).unwrap();
        let scaled = Self::epsilon() * Self::from_f64(64.0).unwrap();
        if scaled > floor {
            scaled
        } else {
            floor
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts an `f64` constant into `T`.
#[inline]
pub fn cast<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("finite f64 constant representable in scalar type")
}

/// Converts an unsigned count into `T`.
#[inline]
pub fn from_count<T: Scalar>(n: usize) -> T {
    T::from_usize(n).expect("count representable in scalar type")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probability_tolerance_tracks_precision() {
        assert_eq!(f64::probability_tolerance(), 1e-12);
        assert!(f32::probability_tolerance() > 1e-7);
    }
}
