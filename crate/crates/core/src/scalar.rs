//! Numeric backends.
//!
//! Everything that must hold *exactly* (tower property, sublevel identities,
//! equidistributed averages, allocation invariants) is written once against
//! [`Scalar`] and instantiated either with `f64` or with [`Rational`].

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational used by the exact arithmetic mode.
pub type Rational = BigRational;

/// Default comparison tolerance of the float mode.
pub const FLOAT_TOL: f64 = 1e-12;

pub trait Scalar:
    Clone + PartialOrd + Debug + Display + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// `true` for exact backends; comparisons then ignore tolerances.
    const EXACT: bool;

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Exact conversion from a finite float (every finite `f64` is a dyadic rational).
    fn from_f64_exact(x: f64) -> Result<Self> {
        Self::from_f64(x).ok_or_else(|| Error::InvalidArgument(format!("non-finite value {x}")))
    }

    fn from_usize_exact(n: usize) -> Self {
        Self::from_usize(n).expect("usize fits every backend")
    }

    /// `a == b` exactly for exact backends, within `tol` (absolute, scaled by
    /// magnitude above 1) otherwise.
    fn approx_eq(a: &Self, b: &Self, tol: f64) -> bool {
        if Self::EXACT {
            a == b
        } else {
            let (x, y) = (a.to_f64_lossy(), b.to_f64_lossy());
            if x == y {
                return true;
            }
            (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0)
        }
    }

    /// `a <= b`, with float slack for inexact backends.
    fn le_tol(a: &Self, b: &Self) -> bool {
        if Self::EXACT {
            a <= b
        } else {
            a.to_f64_lossy() <= b.to_f64_lossy() + FLOAT_TOL
        }
    }

    fn sum<'a, I: IntoIterator<Item = &'a Self>>(items: I) -> Self {
        items.into_iter().fold(Self::zero(), |acc, x| acc + x.clone())
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }

    /// Midpoint of two values.
    fn midpoint(a: &Self, b: &Self) -> Self {
        (a.clone() + b.clone()) / (Self::one() + Self::one())
    }

    /// `floor(self)` for nonnegative values, saturating into `u64`.
    fn floor_u64(&self) -> u64;

    /// Nearest backend value to an exact rational.
    fn from_rational(q: &Rational) -> Self;
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn to_f64_lossy(&self) -> f64 {
        *self
    }

    fn floor_u64(&self) -> u64 {
        if *self <= 0.0 {
            0
        } else {
            self.floor() as u64
        }
    }

    fn from_rational(q: &Rational) -> Self {
        q.to_f64().unwrap_or(f64::NAN)
    }

    fn from_f64_exact(x: f64) -> Result<Self> {
        if x.is_finite() {
            Ok(x)
        } else {
            Err(Error::InvalidArgument(format!("non-finite value {x}")))
        }
    }

    // Neumaier summation keeps probability sums within a few ulps of 1.
    fn sum<'a, I: IntoIterator<Item = &'a Self>>(items: I) -> Self {
        let mut s = 0.0f64;
        let mut c = 0.0f64;
        for &x in items {
            let t = s + x;
            if s.abs() >= x.abs() {
                c += (s - t) + x;
            } else {
                c += (x - t) + s;
            }
            s = t;
        }
        s + c
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn floor_u64(&self) -> u64 {
        if *self <= Rational::zero() {
            0
        } else {
            self.floor().to_integer().to_u64().unwrap_or(u64::MAX)
        }
    }

    fn from_rational(q: &Rational) -> Self {
        q.clone()
    }

    fn from_f64_exact(x: f64) -> Result<Self> {
        Rational::from_float(x).ok_or_else(|| Error::InvalidArgument(format!("non-finite value {x}")))
    }
}

/// Parses a plain decimal literal (`-12.5`, `3`, `1e-3`, `0.25`) or a
/// fraction (`1/3`) into an exact rational. No binary rounding takes place.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    let bad = || Error::InvalidArgument(format!("not a number: {text:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.as_bytes().first() {
        Some(b'-') => (true, &mantissa[1..]),
        Some(b'+') => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let all: String = format!("{int_part}{frac_part}");
    let mut numer = BigInt::from_str(if all.is_empty() { "0" } else { &all }).map_err(|_| bad())?;
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let value = if scale >= 0 {
        Rational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(value)
}

/// Parses a decimal literal into any backend: exactly for rationals, via
/// the standard float parser otherwise.
pub fn parse_scalar<T: Scalar>(text: &str) -> Result<T> {
    if T::EXACT {
        Ok(T::from_rational(&parse_rational(text)?))
    } else {
        let x: f64 = text
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("not a number: {text:?}")))?;
        T::from_f64_exact(x)
    }
}

/// Converts between backends (float to rational is exact; rational to float rounds).
pub fn convert<S: Scalar, T: Scalar>(x: &S) -> Result<T> {
    if S::EXACT && T::EXACT {
        parse_scalar::<T>(&x.to_string())
    } else {
        T::from_f64_exact(x.to_f64_lossy())
    }
}

pub fn rational_from_f64(x: f64) -> Result<Rational> {
    <Rational as Scalar>::from_f64_exact(x)
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}
