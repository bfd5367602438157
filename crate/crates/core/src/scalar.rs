//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar the toolkit is generic over (`f32` or `f64`).
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Send
    + Sync
    + Default
    + Debug
    + Display
    + LowerExp
    + FromStr
    + 'static
{
    /// Significant decimal digits needed for a lossless text round trip.
    const SIG_DIGITS: usize;

    /// Converts an `f64` literal, panicking only on non-representable input.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).unwrap_or_else(Self::infinity)
    }

    /// Smallest representable value strictly greater than `self` (finite inputs).
    fn step_up(self) -> Self {
        let tiny = Self::min_positive_value();
        let bump = (self.abs() * Self::epsilon()).max(tiny);
        let mut next = self + bump;
        // halve the bump while it still moves the value
        let mut b = bump;
        loop {
            let half = b / Self::lit(2.0);
            let cand = self + half;
            if cand > self && half > Self::zero() {
                next = cand;
                b = half;
            } else {
                break;
            }
        }
        next
    }
}

impl Scalar for f32 {
    const SIG_DIGITS: usize = 9;
}

impl Scalar for f64 {
    const SIG_DIGITS: usize = 17;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_up_is_next_representable() {
        assert_eq!(1.0f64.step_up(), f64::from_bits(1.0f64.to_bits() + 1));
        assert_eq!(0.0f64.step_up(), f64::from_bits(1));
        assert!((-1.0f32).step_up() > -1.0);
        assert_eq!(3.5f32.step_up(), f32::from_bits(3.5f32.to_bits() + 1));
    }
}
