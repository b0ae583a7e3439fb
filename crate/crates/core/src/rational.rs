//! Exact rational scalars.
//!
//! [`Rational`] wraps an arbitrary-precision fraction and adds the pieces the
//! series layer needs: strict `p/q` parsing (decimals rejected, to keep the
//! pipeline exact end-to-end), string serialization in the same format, and
//! overflow-safe conversion to floating point — both the value itself and
//! `ln|·|`, which stay usable when the fraction has tens of thousands of
//! bits and a naive `numer as f64 / denom as f64` would return `inf/inf`.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num::bigint::BigInt;
use num::traits::Pow;
use num::{BigRational, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Exact rational number. Always stored reduced with positive denominator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rational(BigRational);

impl Rational {
    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    /// Builds `p/q`.
    ///
    /// # Panics
    /// Panics if `q == 0`.
    pub fn new(p: i64, q: i64) -> Self {
        Rational(BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    pub fn from_int(n: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_big(r: BigRational) -> Self {
        Rational(r)
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    /// True for 0, 1, 2, … — integers with no negative part.
    pub fn is_natural(&self) -> bool {
        self.0.is_integer() && !self.0.is_negative()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    /// The integer value, when the fraction is an integer.
    pub fn to_integer(&self) -> Option<BigInt> {
        self.is_integer().then(|| self.0.to_integer())
    }

    /// The integer value as `i64`, when it is one and fits.
    pub fn to_i64(&self) -> Option<i64> {
        self.to_integer().and_then(|n| n.to_i64())
    }

    /// `self^exp` with integer exponent (negative allowed; base must be
    /// nonzero for negative exponents).
    pub fn pow(&self, exp: i32) -> Self {
        Rational(Pow::pow(&self.0, exp))
    }

    /// Descending (falling) factorial z·(z−1)···(z−n+1); empty product = 1.
    pub fn falling(&self, n: u32) -> Self {
        let mut acc = Rational::one();
        let mut z = self.clone();
        for _ in 0..n {
            acc *= &z;
            z -= &Rational::one();
        }
        acc
    }

    /// Nearest double. Values beyond the representable range become
    /// `±inf`/`±0` rather than NaN, however large the fraction's bignums are.
    pub fn to_f64(&self) -> f64 {
        if self.0.is_zero() {
            return 0.0;
        }
        let (pf, pe) = split_big(self.0.numer());
        let (qf, qe) = split_big(self.0.denom());
        // pf/qf carries the full 53-bit mantissa; the power of two is applied
        // in two halves so each factor stays inside f64's exponent range.
        let e = pe - qe;
        let (h1, h2) = (e / 2, e - e / 2);
        (pf / qf) * pow2(h1) * pow2(h2)
    }

    /// Natural log of |self|, computed from bit lengths so it stays finite
    /// for fractions far beyond f64 range. Returns `-inf` for zero.
    pub fn ln_abs(&self) -> f64 {
        if self.0.is_zero() {
            return f64::NEG_INFINITY;
        }
        let (pf, pe) = split_big(self.0.numer());
        let (qf, qe) = split_big(self.0.denom());
        pf.abs().ln() - qf.abs().ln() + (pe - qe) as f64 * std::f64::consts::LN_2
    }
}

/// Splits a nonzero bignum as `m · 2^e` with `m` an f64 of at most 96 bits.
fn split_big(n: &BigInt) -> (f64, i64) {
    let bits = n.bits() as i64;
    let shift = (bits - 96).max(0);
    let m = (n >> shift as u64).to_f64().expect("≤96-bit integer fits f64");
    (m, shift)
}

/// `2^e` exactly, saturating to `inf`/`0` outside f64's exponent range.
fn pow2(e: i64) -> f64 {
    2f64.powi(e.clamp(-1100, 1100) as i32)
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Why a rational literal failed to parse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseRationalError {
    /// Empty input (or empty numerator/denominator around `/`).
    Empty,
    /// A character outside sign/digits/`/`. Decimal points and exponent
    /// notation land here: only exact fraction literals are accepted.
    InvalidCharacter(char),
    /// Denominator is the literal zero.
    ZeroDenominator,
}

impl fmt::Display for ParseRationalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseRationalError::Empty => write!(f, "empty rational literal"),
            ParseRationalError::InvalidCharacter(c) => {
                write!(f, "invalid character {c:?} in rational literal (expected p or p/q)")
            }
            ParseRationalError::ZeroDenominator => write!(f, "zero denominator"),
        }
    }
}

impl std::error::Error for ParseRationalError {}

fn parse_int_part(s: &str, sign_ok: bool) -> Result<BigInt, ParseRationalError> {
    if s.is_empty() {
        return Err(ParseRationalError::Empty);
    }
    let digits = match s.strip_prefix(['+', '-']) {
        Some(rest) if sign_ok => rest,
        Some(_) => return Err(ParseRationalError::InvalidCharacter(s.chars().next().unwrap())),
        None => s,
    };
    if digits.is_empty() {
        return Err(ParseRationalError::Empty);
    }
    if let Some(bad) = digits.chars().find(|c| !c.is_ascii_digit()) {
        return Err(ParseRationalError::InvalidCharacter(bad));
    }
    Ok(BigInt::from_str(s).expect("validated digits"))
}

impl FromStr for Rational {
    type Err = ParseRationalError;

    /// Accepts `p` or `p/q` with an optional leading sign on `p`, digits
    /// only. No whitespace, no decimals, no exponents.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once('/') {
            None => Ok(Rational(BigRational::from_integer(parse_int_part(s, true)?))),
            Some((p, q)) => {
                let p = parse_int_part(p, true)?;
                let q = parse_int_part(q, false)?;
                if q.is_zero() {
                    return Err(ParseRationalError::ZeroDenominator);
                }
                Ok(Rational(BigRational::new(p, q)))
            }
        }
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_int(n)
    }
}

impl From<BigInt> for Rational {
    fn from(n: BigInt) -> Self {
        Rational(BigRational::from_integer(n))
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational((self.0).$method(rhs.0))
            }
        }
        impl<'a> $trait<&'a Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
        impl<'a> $trait<&'a Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                Rational((self.0).$method(&rhs.0))
            }
        }
        impl $trait<Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational((&self.0).$method(rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        self.0 += &rhs.0;
    }
}

impl SubAssign<&Rational> for Rational {
    fn sub_assign(&mut self, rhs: &Rational) {
        self.0 -= &rhs.0;
    }
}

impl MulAssign<&Rational> for Rational {
    fn mul_assign(&mut self, rhs: &Rational) {
        self.0 *= &rhs.0;
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
