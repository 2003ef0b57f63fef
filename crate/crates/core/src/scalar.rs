//! Scalar abstraction for code parameters and derived probabilities.
//!
//! Parameter structs and closed-form bounds are generic over [`Scalar`], so the
//! same formula can be evaluated in `f64` for reporting and in exact rationals
//! for cross-checking.

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, ToPrimitive};

/// Numeric type usable for code parameters: `f32`, `f64`, or an exact rational.
pub trait Scalar:
    Num + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
    fn from_ratio(num: u64, den: u64) -> Self {
        Self::from_u64(num).expect("numerator representable") / Self::from_u64(den).expect("denominator representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Num + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
}

/// Exact rational scalar.
pub type Exact = Ratio<i128>;

/// Exact nonnegative fraction used for distances.
pub type Fraction = Ratio<u64>;

/// Convert a distance fraction into any scalar.
pub fn fraction_to<T: Scalar>(f: Fraction) -> T {
    T::from_ratio(*f.numer(), *f.denom())
}

/// Exact rational approximation of a float threshold (denominator up to 2^20),
/// rounding down so that `f <= x` comparisons never loosen.
pub fn fraction_floor(x: f64) -> Fraction {
    const DEN: u64 = 1 << 20;
    let x = x.max(0.0);
    Fraction::new((x * DEN as f64).floor() as u64, DEN)
}
