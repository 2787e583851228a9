//! Numeric backends.
//!
//! Every solver in this crate is generic over [`Scalar`], which is implemented
//! for `f64` (tolerance-based comparisons) and for [`Rational`] (exact
//! arbitrary-precision fractions). The exact backend is used to check closed
//! form values such as `17/28` without any rounding.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational number.
pub type Rational = num_rational::BigRational;

pub trait Scalar:
    Signed + FromPrimitive + ToPrimitive + Clone + PartialOrd + Debug + Display + Send + Sync + 'static
{
    /// Comparison slack used by pivoting and feasibility tests. Zero for exact types.
    fn eps() -> Self;

    /// Whether arithmetic on this type is exact.
    fn is_exact() -> bool;

    fn ratio(num: i64, den: i64) -> Self;

    fn from_usize(n: usize) -> Self {
        Self::ratio(n as i64, 1)
    }

    /// Lossy conversion used for reporting.
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `a > b` beyond the backend slack.
    fn gt_eps(&self, other: &Self) -> bool {
        self.clone() > other.clone() + Self::eps()
    }

    /// `a < b` beyond the backend slack.
    fn lt_eps(&self, other: &Self) -> bool {
        self.clone() + Self::eps() < other.clone()
    }

    fn approx_eq(&self, other: &Self) -> bool {
        !self.gt_eps(other) && !self.lt_eps(other)
    }

    fn is_positive_eps(&self) -> bool {
        self.gt_eps(&Self::zero())
    }

    fn min_of(a: &Self, b: &Self) -> Self {
        if a <= b {
            a.clone()
        } else {
            b.clone()
        }
    }

    fn max_of(a: &Self, b: &Self) -> Self {
        if a >= b {
            a.clone()
        } else {
            b.clone()
        }
    }
}

impl Scalar for f64 {
    fn eps() -> Self {
        1e-12
    }

    fn is_exact() -> bool {
        false
    }

    fn ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
}

impl Scalar for Rational {
    fn eps() -> Self {
        Rational::zero()
    }

    fn is_exact() -> bool {
        true
    }

    fn ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64_lossy(&self) -> f64 {
        // Ratio::to_f64 handles huge numerators/denominators without overflow.
        self.to_f64().unwrap_or_else(|| {
            let n = self.numer().to_f64().unwrap_or(f64::NAN);
            let d = self.denom().to_f64().unwrap_or(f64::NAN);
            n / d
        })
    }
}

/// Sum of a slice.
pub fn sum<S: Scalar>(values: &[S]) -> S {
    values.iter().fold(S::zero(), |acc, v| acc + v.clone())
}

/// Inner product of two equally long slices.
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(S::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

/// Best rational approximation of `x` with denominator at most `max_den`,
/// by continued fractions.
pub fn rationalize(x: f64, max_den: u64) -> Rational {
    let negative = x < 0.0;
    let mut r = x.abs();
    let (mut p0, mut q0, mut p1, mut q1) = (0u128, 1u128, 1u128, 0u128);
    for _ in 0..64 {
        let a = r.floor();
        if a > 1e18 {
            break;
        }
        let a_int = a as u128;
        let p2 = a_int * p1 + p0;
        let q2 = a_int * q1 + q0;
        if q2 > max_den as u128 {
            break;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        let frac = r - a;
        if frac < 1e-15 {
            break;
        }
        r = 1.0 / frac;
    }
    if q1 == 0 {
        return Rational::zero();
    }
    let value = Rational::new(BigInt::from(p1), BigInt::from(q1));
    if negative {
        -value
    } else {
        value
    }
}

/// Converts a slice between backends through `f64` (exact when the target is `f64`).
pub fn to_f64_vec<S: Scalar>(values: &[S]) -> Vec<f64> {
    values.iter().map(Scalar::to_f64_lossy).collect()
}

/// Parses `"p/q"`, integers or decimals into a scalar. For `Rational`,
/// decimals are read exactly as written.
pub fn parse_scalar<S: Scalar>(text: &str) -> Option<S> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let num: i64 = num.trim().parse().ok()?;
        let den: i64 = den.trim().parse().ok()?;
        if den == 0 {
            return None;
        }
        return Some(S::ratio(num, den));
    }
    if let Ok(int) = text.parse::<i64>() {
        return Some(S::ratio(int, 1));
    }
    let value: f64 = text.parse().ok()?;
    if !value.is_finite() {
        return None;
    }
    if S::is_exact() {
        // Decimal literal: exact value of the decimal string, not of the binary float.
        let (int_part, frac_part) = text.split_once('.').unwrap_or((text, ""));
        if frac_part.chars().all(|c| c.is_ascii_digit()) && frac_part.len() <= 17 {
            let digits = format!("{int_part}{frac_part}");
            let num: i64 = digits.parse().ok()?;
            let den = 10i64.checked_pow(frac_part.len() as u32)?;
            return Some(S::ratio(num, den));
        }
    }
    S::from_f64(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    #[test]
    fn rationalize_recovers_small_fractions() {
        assert_eq!(rationalize(5.0 / 14.0, 1000), Rational::ratio(5, 14));
        assert_eq!(rationalize(17.0 / 28.0, 1000), Rational::ratio(17, 28));
        assert_eq!(rationalize(-0.75, 10), Rational::ratio(-3, 4));
        assert_eq!(rationalize(0.0, 10), Rational::zero());
    }

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_scalar::<Rational>("5/14"), Some(Rational::ratio(5, 14)));
        assert_eq!(parse_scalar::<Rational>("0.25"), Some(Rational::ratio(1, 4)));
        assert_eq!(parse_scalar::<Rational>("-3"), Some(Rational::ratio(-3, 1)));
        assert_eq!(parse_scalar::<f64>("1/4"), Some(0.25));
        assert_eq!(parse_scalar::<f64>("1/0"), None);
        assert_eq!(parse_scalar::<f64>("abc"), None);
    }

    #[test]
    fn eps_comparisons() {
        assert!(1.0f64.approx_eq(&(1.0 + 1e-14)));
        assert!(!Rational::one().approx_eq(&Rational::ratio(1_000_000_001, 1_000_000_000)));
        assert!(0.5f64.gt_eps(&0.4));
    }
}
