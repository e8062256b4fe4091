//! Scalar carriers and extended non-negative values.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

use crate::error::CoreError;

/// Exact rational number, always stored reduced with a positive denominator.
pub type Rat = BigRational;

/// Coefficient ring for polynomials.
///
/// Implemented by the numeric scalars and by polynomials themselves, so a
/// polynomial whose coefficients are polynomials in unknown parameters is a
/// `Poly<Poly<Rat>>`.
pub trait Coeff:
    Clone
    + PartialEq
    + fmt::Debug
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn from_rat(r: &Rat) -> Self;
}

/// Ordered field used for evaluation: `f32`, `f64` or [`Rat`].
pub trait Scalar: Coeff + Num + PartialOrd + fmt::Display {
    fn to_f64(&self) -> f64;
    /// Exact conversion back to a rational, if the value is finite.
    fn to_rat(&self) -> Option<Rat>;
}

impl Coeff for Rat {
    fn from_rat(r: &Rat) -> Self {
        r.clone()
    }
}

impl Scalar for Rat {
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn to_rat(&self) -> Option<Rat> {
        Some(self.clone())
    }
}

impl Coeff for f64 {
    fn from_rat(r: &Rat) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn to_f64(&self) -> f64 {
        *self
    }
    fn to_rat(&self) -> Option<Rat> {
        Rat::from_float(*self)
    }
}

impl Coeff for f32 {
    fn from_rat(r: &Rat) -> Self {
        ToPrimitive::to_f32(r).unwrap_or(f32::NAN)
    }
}

impl Scalar for f32 {
    fn to_f64(&self) -> f64 {
        *self as f64
    }
    fn to_rat(&self) -> Option<Rat> {
        Rat::from_float(*self)
    }
}

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Parses `p`, `p/q` or a finite decimal such as `0.25` exactly.
pub fn parse_rat(s: &str) -> Result<Rat, CoreError> {
    let s = s.trim();
    let bad = || CoreError::Parse(format!("not a rational literal: {s:?}"));
    if let Some((p, q)) = s.split_once('/') {
        let p = parse_rat(p)?;
        let q = parse_rat(q)?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(p / q);
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let value = if let Some((whole, frac)) = body.split_once('.') {
        if frac.is_empty() && whole.is_empty() {
            return Err(bad());
        }
        let digits = format!("{whole}{frac}");
        let n = BigInt::from_str_radix(&digits, 10).map_err(|_| bad())?;
        let d = num_traits::pow(BigInt::from(10), frac.len());
        Rat::new(n, d)
    } else {
        Rat::from_integer(BigInt::from_str_radix(body, 10).map_err(|_| bad())?)
    };
    Ok(if neg { -value } else { value })
}

/// Formats a rational as `p` or `p/q`.
pub fn fmt_rat(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn floor(r: &Rat) -> BigInt {
    r.floor().to_integer()
}

pub fn ceil(r: &Rat) -> BigInt {
    r.ceil().to_integer()
}

/// A value in `[0, ∞]` (or a signed finite value during intermediate steps).
///
/// Arithmetic follows `∞ + x = ∞`, `0 · ∞ = 0` and `r · ∞ = ∞` for `r ≠ 0`.
#[derive(Clone, Debug, PartialEq)]
pub enum Ext<S> {
    Fin(S),
    Inf,
}

impl<S: Scalar> Ext<S> {
    pub fn zero() -> Self {
        Ext::Fin(S::zero())
    }

    pub fn is_inf(&self) -> bool {
        matches!(self, Ext::Inf)
    }

    pub fn finite(&self) -> Option<&S> {
        match self {
            Ext::Fin(s) => Some(s),
            Ext::Inf => None,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        match (self, other) {
            (Ext::Fin(a), Ext::Fin(b)) => Ext::Fin(a.clone() + b.clone()),
            _ => Ext::Inf,
        }
    }

    /// Multiplies by a finite weight.
    pub fn scale(&self, w: &S) -> Self {
        if w.is_zero() {
            return Ext::zero();
        }
        match self {
            Ext::Fin(a) => Ext::Fin(a.clone() * w.clone()),
            Ext::Inf => Ext::Inf,
        }
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Ext::Fin(s) => s.to_f64(),
            Ext::Inf => f64::INFINITY,
        }
    }
}

impl<S: Scalar> PartialOrd for Ext<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Ext::Fin(a), Ext::Fin(b)) => a.partial_cmp(b),
            (Ext::Fin(_), Ext::Inf) => Some(Ordering::Less),
            (Ext::Inf, Ext::Fin(_)) => Some(Ordering::Greater),
            (Ext::Inf, Ext::Inf) => Some(Ordering::Equal),
        }
    }
}

impl<S: Scalar> fmt::Display for Ext<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::Fin(s) => write!(f, "{s}"),
            Ext::Inf => write!(f, "inf"),
        }
    }
}

pub(crate) fn is_negative(r: &Rat) -> bool {
    r.is_negative()
}
