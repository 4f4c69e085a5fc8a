//! Scalar backends shared by every computation in the crate.
//!
//! The power-factor recursion, the coefficient sums and the matrix oracles
//! only need field arithmetic, so they are written once against [`Scalar`].
//! `f64` is the default backend; [`BigRational`] turns every oracle
//! comparison into an exact identity.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Failure to parse a number literal such as `0.75`, `-1e-3` or `3/4`.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid number literal `{literal}`: {reason}")]
pub struct LiteralError {
    pub literal: String,
    pub reason: &'static str,
}

impl LiteralError {
    fn new(literal: &str, reason: &'static str) -> Self {
        LiteralError {
            literal: literal.to_string(),
            reason,
        }
    }
}

/// Field element used by the kernel, factor and coefficient computations.
pub trait Scalar:
    Clone + fmt::Debug + fmt::Display + PartialOrd + Num + Signed + Send + Sync + 'static
{
    /// True when arithmetic is exact (no rounding).
    const EXACT: bool;

    fn from_ratio(num: i64, den: i64) -> Self;

    /// Converts a binary float. Exact for the rational backend.
    fn from_f64(x: f64) -> Self;

    fn to_f64(&self) -> f64;

    /// Parses a decimal (`0.75`, `1e-3`) or ratio (`3/4`) literal.
    fn parse_literal(s: &str) -> Result<Self, LiteralError>;

    fn from_usize(n: usize) -> Self {
        Self::from_ratio(n as i64, 1)
    }

    /// `|self| <= tol`, with `tol` given in binary floating point.
    fn within(&self, tol: f64) -> bool {
        self.abs() <= Self::from_f64(tol)
    }
}

/// `base^exp` with the convention `0^0 = 1`.
pub fn powu<S: Scalar>(base: &S, exp: u64) -> S {
    let mut acc = S::one();
    let mut b = base.clone();
    let mut e = exp;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b.clone();
        }
        e >>= 1;
        if e > 0 {
            b = b.clone() * b;
        }
    }
    acc
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn from_f64(x: f64) -> Self {
        x
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn parse_literal(s: &str) -> Result<Self, LiteralError> {
        let t = s.trim();
        if let Some((n, d)) = t.split_once('/') {
            let n: f64 = n.trim().parse().map_err(|_| LiteralError::new(s, "bad numerator"))?;
            let d: f64 = d.trim().parse().map_err(|_| LiteralError::new(s, "bad denominator"))?;
            if d == 0.0 {
                return Err(LiteralError::new(s, "zero denominator"));
            }
            return Ok(n / d);
        }
        let v: f64 = t.parse().map_err(|_| LiteralError::new(s, "not a number"))?;
        if !v.is_finite() {
            return Err(LiteralError::new(s, "not finite"));
        }
        Ok(v)
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn from_ratio(num: i64, den: i64) -> Self {
        (num as f64 / den as f64) as f32
    }

    fn from_f64(x: f64) -> Self {
        x as f32
    }

    fn to_f64(&self) -> f64 {
        *self as f64
    }

    fn parse_literal(s: &str) -> Result<Self, LiteralError> {
        f64::parse_literal(s).map(|v| v as f32)
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite float")
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn parse_literal(s: &str) -> Result<Self, LiteralError> {
        parse_rational(s)
    }
}

/// Exact parse of a decimal or ratio literal.
pub fn parse_rational(s: &str) -> Result<BigRational, LiteralError> {
    let t = s.trim();
    if let Some((n, d)) = t.split_once('/') {
        let n = parse_rational(n)?;
        let d = parse_rational(d)?;
        if d.is_zero() {
            return Err(LiteralError::new(s, "zero denominator"));
        }
        return Ok(n / d);
    }

    let (negative, body) = match t.as_bytes().first() {
        Some(b'-') => (true, &t[1..]),
        Some(b'+') => (false, &t[1..]),
        _ => (false, t),
    };
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(pos) => {
            let e: i32 = body[pos + 1..]
                .parse()
                .map_err(|_| LiteralError::new(s, "bad exponent"))?;
            (&body[..pos], e)
        }
        None => (body, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(LiteralError::new(s, "empty"));
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(LiteralError::new(s, "not a number"));
    }
    let digits = format!("{int_part}{frac_part}");
    let mut value = BigRational::from_integer(
        BigInt::from_str_radix(&digits, 10).map_err(|_| LiteralError::new(s, "not a number"))?,
    );
    let scale = exponent - frac_part.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    if scale >= 0 {
        value *= powu(&ten, scale as u64);
    } else {
        value /= powu(&ten, (-scale) as u64);
    }
    Ok(if negative { -value } else { value })
}

/// Rounds half away from zero to `digits` decimals and formats the result.
///
/// `{:.3}` rounds ties to even (1.3125 becomes 1.312), which does not match how
/// tabulated coefficients are conventionally printed.
pub fn format_rounded(x: f64, digits: usize) -> String {
    let scale = 10f64.powi(digits as i32);
    let r = (x * scale).round() / scale;
    let r = if r == 0.0 { 0.0 } else { r };
    format!("{r:.digits$}")
}

/// Shortest representation with a Unicode minus sign.
pub fn display_signed<S: Scalar>(x: &S) -> String {
    let s = if x.is_zero() { "0".to_string() } else { x.to_string() };
    match s.strip_prefix('-') {
        Some(rest) => format!("\u{2212}{rest}"),
        None => s,
    }
}

/// Converts between backends through the shortest decimal form of `f64`
/// values, so `0.1_f64` becomes exactly `1/10` in rational mode.
pub fn convert<A: Scalar, B: Scalar>(x: &A) -> B {
    if A::EXACT && B::EXACT {
        B::parse_literal(&x.to_string()).expect("rational display round-trips")
    } else if A::EXACT {
        B::from_f64(x.to_f64())
    } else {
        B::parse_literal(&format!("{}", x.to_f64())).unwrap_or_else(|_| B::from_f64(x.to_f64()))
    }
}
