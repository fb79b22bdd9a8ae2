//! Scalar types.
//!
//! All polynomial, matrix and kernel code is generic over [`Scalar`]. Three
//! families implement it:
//!
//! * [`BigRational`] (alias [`Exact`](crate::Exact)): error-free arithmetic.
//!   Transcendental operations succeed only when the result is rational.
//! * [`BigReal`] (alias [`Real`](crate::Real)): MPFR floats rounded at the
//!   ambient precision, see [`precision_bits`].
//! * `f64` / `f32`: hardware floats for quick, low-degree runs.

use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::atomic::{AtomicU32, Ordering};

use num_bigint::{BigInt, Sign};
use rug::ops::Pow;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rug::integer::Order;
use rug::Float;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

pub const DEFAULT_PRECISION_BITS: u32 = 256;

static PRECISION_BITS: AtomicU32 = AtomicU32::new(DEFAULT_PRECISION_BITS);

/// Ambient precision (in bits) used for every [`BigReal`] operation.
pub fn precision_bits() -> u32 {
    PRECISION_BITS.load(Ordering::Relaxed)
}

/// Changes the ambient precision. Values created earlier keep their bits but
/// every subsequent operation rounds to the new precision.
pub fn set_precision_bits(bits: u32) {
    assert!(bits >= 24, "precision below 24 bits is not supported");
    PRECISION_BITS.store(bits, Ordering::Relaxed);
}

/// Field operations plus the handful of analytic functions the library needs.
pub trait Scalar:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + for<'a> Div<&'a Self, Output = Self>
    + for<'a> AddAssign<&'a Self>
    + for<'a> SubAssign<&'a Self>
    + for<'a> MulAssign<&'a Self>
    + for<'a> DivAssign<&'a Self>
{
    /// True when arithmetic is error-free.
    const EXACT: bool;

    fn from_ratio(q: &BigRational) -> Self;

    fn from_f64(x: f64) -> Self;

    fn to_f64(&self) -> f64;

    /// Exact rational value of `self` (floats are dyadic rationals).
    fn to_ratio(&self) -> Option<BigRational>;

    fn abs(&self) -> Self;

    fn sqrt(&self) -> Result<Self>;

    fn ln(&self) -> Result<Self>;

    /// `self^e` for `self >= 0`.
    fn pow_ratio(&self, e: &BigRational) -> Result<Self>;

    /// Unit roundoff; zero for exact types.
    fn epsilon() -> Self;

    fn to_decimal(&self, digits: usize) -> String;

    fn from_i64(n: i64) -> Self {
        Self::from_ratio(&BigRational::from_integer(BigInt::from(n)))
    }

    fn from_usize(n: usize) -> Self {
        Self::from_ratio(&BigRational::from_integer(BigInt::from(n)))
    }

    /// Solves `a x = b`; `None` when `a` is singular.
    fn solve_linear(a: Matrix<Self>, b: Vec<Self>) -> Option<Vec<Self>> {
        linalg::pivoted_solve(a, b)
    }

    fn determinant(a: Matrix<Self>) -> Self {
        linalg::pivoted_det(a)
    }
}

/// Arbitrary-precision real backed by MPFR.
#[derive(Clone, PartialEq, PartialOrd)]
pub struct BigReal(Float);

impl BigReal {
    pub fn new(value: Float) -> Self {
        BigReal(value)
    }

    pub fn as_float(&self) -> &Float {
        &self.0
    }

    pub fn into_float(self) -> Float {
        self.0
    }

    pub fn exp(&self) -> Self {
        BigReal(Float::with_val(precision_bits(), self.0.exp_ref()))
    }

    pub fn pi() -> Self {
        BigReal(Float::with_val(precision_bits(), rug::float::Constant::Pi))
    }

    pub fn cos(&self) -> Self {
        BigReal(Float::with_val(precision_bits(), self.0.cos_ref()))
    }
}

fn to_rug_integer(n: &BigInt) -> rug::Integer {
    let (sign, digits) = n.to_u32_digits();
    let v = rug::Integer::from_digits(&digits, Order::Lsf);
    if sign == Sign::Minus {
        -v
    } else {
        v
    }
}

fn from_rug_integer(n: &rug::Integer) -> BigInt {
    let digits = n.to_digits::<u32>(Order::Lsf);
    let sign = match n.cmp0() {
        std::cmp::Ordering::Less => Sign::Minus,
        std::cmp::Ordering::Equal => Sign::NoSign,
        std::cmp::Ordering::Greater => Sign::Plus,
    };
    BigInt::from_slice(sign, &digits)
}

pub(crate) fn ratio_to_rug(q: &BigRational) -> rug::Rational {
    rug::Rational::from((to_rug_integer(q.numer()), to_rug_integer(q.denom())))
}

impl fmt::Debug for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.to_string_radix(10, Some(24)))
    }
}

impl fmt::Display for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.to_string_radix(10, Some(24)))
    }
}

macro_rules! big_real_binop {
    ($tr:ident, $method:ident, $atr:ident, $amethod:ident, $op:tt) => {
        impl $tr for BigReal {
            type Output = BigReal;
            fn $method(self, rhs: BigReal) -> BigReal {
                BigReal(Float::with_val(precision_bits(), &self.0 $op &rhs.0))
            }
        }
        impl<'a> $tr<&'a BigReal> for BigReal {
            type Output = BigReal;
            fn $method(self, rhs: &'a BigReal) -> BigReal {
                BigReal(Float::with_val(precision_bits(), &self.0 $op &rhs.0))
            }
        }
        impl<'a, 'b> $tr<&'b BigReal> for &'a BigReal {
            type Output = BigReal;
            fn $method(self, rhs: &'b BigReal) -> BigReal {
                BigReal(Float::with_val(precision_bits(), &self.0 $op &rhs.0))
            }
        }
        impl<'a> $atr<&'a BigReal> for BigReal {
            fn $amethod(&mut self, rhs: &'a BigReal) {
                self.0 = Float::with_val(precision_bits(), &self.0 $op &rhs.0);
            }
        }
        impl $atr for BigReal {
            fn $amethod(&mut self, rhs: BigReal) {
                self.0 = Float::with_val(precision_bits(), &self.0 $op &rhs.0);
            }
        }
    };
}

big_real_binop!(Add, add, AddAssign, add_assign, +);
big_real_binop!(Sub, sub, SubAssign, sub_assign, -);
big_real_binop!(Mul, mul, MulAssign, mul_assign, *);
big_real_binop!(Div, div, DivAssign, div_assign, /);

impl Neg for BigReal {
    type Output = BigReal;
    fn neg(self) -> BigReal {
        BigReal(-self.0)
    }
}

impl Zero for BigReal {
    fn zero() -> Self {
        BigReal(Float::with_val(precision_bits(), 0))
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl One for BigReal {
    fn one() -> Self {
        BigReal(Float::with_val(precision_bits(), 1))
    }
}

impl Scalar for BigReal {
    const EXACT: bool = false;

    fn from_ratio(q: &BigRational) -> Self {
        BigReal(Float::with_val(precision_bits(), ratio_to_rug(q)))
    }

    fn from_f64(x: f64) -> Self {
        BigReal(Float::with_val(precision_bits(), x))
    }

    fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }

    fn to_ratio(&self) -> Option<BigRational> {
        let q = self.0.to_rational()?;
        let (n, d) = q.into_numer_denom();
        Some(BigRational::new(from_rug_integer(&n), from_rug_integer(&d)))
    }

    fn abs(&self) -> Self {
        BigReal(self.0.clone().abs())
    }

    fn sqrt(&self) -> Result<Self> {
        if self.0.is_sign_negative() && !self.0.is_zero() {
            return Err(Error::Domain(format!("sqrt of negative value {self}")));
        }
        Ok(BigReal(Float::with_val(precision_bits(), self.0.sqrt_ref())))
    }

    fn ln(&self) -> Result<Self> {
        if self.0.is_zero() || self.0.is_sign_negative() {
            return Err(Error::Domain(format!("log of nonpositive value {self}")));
        }
        Ok(BigReal(Float::with_val(precision_bits(), self.0.ln_ref())))
    }

    fn pow_ratio(&self, e: &BigRational) -> Result<Self> {
        if e.is_zero() {
            return Ok(Self::one());
        }
        if self.0.is_sign_negative() && !self.0.is_zero() {
            return Err(Error::Domain(format!("power of negative value {self}")));
        }
        if e.is_integer() {
            let k = e.to_i32().ok_or_else(|| Error::Domain("exponent too large".into()))?;
            return Ok(BigReal(Float::with_val(precision_bits(), (&self.0).pow(k))));
        }
        let exp = Float::with_val(precision_bits(), ratio_to_rug(e));
        Ok(BigReal(Float::with_val(precision_bits(), (&self.0).pow(&exp))))
    }

    fn epsilon() -> Self {
        let p = precision_bits() as i32;
        BigReal(Float::with_val(precision_bits(), Float::u_exp(1, 1 - p)))
    }

    fn to_decimal(&self, digits: usize) -> String {
        self.0.to_string_radix(10, Some(digits.max(1)))
    }

    fn from_i64(n: i64) -> Self {
        BigReal(Float::with_val(precision_bits(), n))
    }
}

macro_rules! hardware_float {
    ($t:ty) => {
        impl Scalar for $t {
            const EXACT: bool = false;

            fn from_ratio(q: &BigRational) -> Self {
                ToPrimitive::to_f64(q).unwrap_or(f64::NAN) as $t
            }

            fn from_f64(x: f64) -> Self {
                x as $t
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn to_ratio(&self) -> Option<BigRational> {
                BigRational::from_float(*self)
            }

            fn abs(&self) -> Self {
                <$t>::abs(*self)
            }

            fn sqrt(&self) -> Result<Self> {
                if *self < 0.0 {
                    return Err(Error::Domain(format!("sqrt of negative value {self}")));
                }
                Ok(<$t>::sqrt(*self))
            }

            fn ln(&self) -> Result<Self> {
                if *self <= 0.0 {
                    return Err(Error::Domain(format!("log of nonpositive value {self}")));
                }
                Ok(<$t>::ln(*self))
            }

            fn pow_ratio(&self, e: &BigRational) -> Result<Self> {
                if *self < 0.0 {
                    return Err(Error::Domain(format!("power of negative value {self}")));
                }
                Ok(<$t>::powf(*self, ToPrimitive::to_f64(e).unwrap_or(f64::NAN) as $t))
            }

            fn epsilon() -> Self {
                <$t>::EPSILON / 2.0
            }

            fn to_decimal(&self, digits: usize) -> String {
                format!("{:.*e}", digits.saturating_sub(1), self)
            }
        }
    };
}

hardware_float!(f64);
hardware_float!(f32);

/// Exact `k`-th root of a nonnegative integer, if it exists.
fn exact_root(n: &BigInt, k: u32) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let r = n.nth_root(k);
    if num_traits::pow(r.clone(), k as usize) == *n {
        Some(r)
    } else {
        None
    }
}

/// `q^e` when the result is rational.
pub fn exact_pow(q: &BigRational, e: &BigRational) -> Option<BigRational> {
    if e.is_zero() {
        return Some(BigRational::one());
    }
    if q.is_zero() {
        return if e.is_positive() { Some(BigRational::zero()) } else { None };
    }
    if q.is_negative() && !e.is_integer() {
        return None;
    }
    let den = e.denom().to_u32()?;
    let num = e.numer().to_i32()?;
    let base = if den == 1 {
        q.clone()
    } else {
        BigRational::new(exact_root(q.numer(), den)?, exact_root(q.denom(), den)?)
    };
    let powed = num_traits::pow(base, num.unsigned_abs() as usize);
    if num < 0 {
        Some(powed.recip())
    } else {
        Some(powed)
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_ratio(q: &BigRational) -> Self {
        q.clone()
    }

    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite float")
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn to_ratio(&self) -> Option<BigRational> {
        Some(self.clone())
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }

    fn sqrt(&self) -> Result<Self> {
        self.pow_ratio(&BigRational::new(1.into(), 2.into()))
    }

    fn ln(&self) -> Result<Self> {
        if self.is_one() {
            Ok(Self::zero())
        } else {
            Err(Error::Inexact(format!("log({self}) is irrational")))
        }
    }

    fn pow_ratio(&self, e: &BigRational) -> Result<Self> {
        if self.is_negative() {
            return Err(Error::Domain(format!("power of negative value {self}")));
        }
        exact_pow(self, e).ok_or_else(|| Error::Inexact(format!("({self})^({e}) is irrational")))
    }

    fn epsilon() -> Self {
        Self::zero()
    }

    fn to_decimal(&self, digits: usize) -> String {
        ratio_to_decimal(self, digits)
    }

    fn solve_linear(a: Matrix<Self>, b: Vec<Self>) -> Option<Vec<Self>> {
        linalg::bareiss_solve(a, b)
    }

    fn determinant(a: Matrix<Self>) -> Self {
        linalg::bareiss_det(a)
    }
}

/// Decimal rendering with `digits` digits after the point, rounded to nearest.
pub fn ratio_to_decimal(q: &BigRational, digits: usize) -> String {
    let scale = num_traits::pow(BigInt::from(10), digits);
    let scaled = (Signed::abs(q) * BigRational::from_integer(scale)).round().to_integer();
    let mut s = scaled.to_string();
    if digits > 0 {
        if s.len() <= digits {
            s = format!("{}{}", "0".repeat(digits + 1 - s.len()), s);
        }
        s.insert(s.len() - digits, '.');
    }
    if q.is_negative() && scaled.is_positive() {
        s.insert(0, '-');
    }
    s
}

/// Parses `"3"`, `"-1/2"` or a decimal literal such as `"0.25"` into an exact rational.
pub fn parse_ratio(text: &str) -> Result<BigRational> {
    let t = text.trim();
    let bad = || Error::Config(format!("cannot parse rational number {t:?}"));
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((int, frac)) = t.split_once('.') {
        let neg = int.trim_start().starts_with('-');
        let int_part: BigInt = if int.is_empty() || int == "-" || int == "+" {
            BigInt::zero()
        } else {
            int.parse().map_err(|_| bad())?
        };
        if !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let frac_part: BigInt = if frac.is_empty() { BigInt::zero() } else { frac.parse().map_err(|_| bad())? };
        let denom = num_traits::pow(BigInt::from(10), frac.len());
        let magnitude = BigRational::from_integer(int_part.abs()) + BigRational::new(frac_part, denom);
        return Ok(if neg { -magnitude } else { magnitude });
    }
    let n: BigInt = t.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(n))
}

/// Shorthand for building exact rationals in code and tests.
pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_ratio("-1/2").unwrap(), ratio(-1, 2));
        assert_eq!(parse_ratio("0.25").unwrap(), ratio(1, 4));
        assert_eq!(parse_ratio("-0.5").unwrap(), ratio(-1, 2));
        assert_eq!(parse_ratio("7").unwrap(), ratio(7, 1));
        assert!(parse_ratio("1/0").is_err());
        assert!(parse_ratio("abc").is_err());
    }

    #[test]
    fn exact_powers() {
        assert_eq!(exact_pow(&ratio(9, 4), &ratio(1, 2)), Some(ratio(3, 2)));
        assert_eq!(exact_pow(&ratio(4, 1), &ratio(3, 2)), Some(ratio(8, 1)));
        assert_eq!(exact_pow(&ratio(2, 1), &ratio(1, 2)), None);
        assert_eq!(exact_pow(&ratio(2, 1), &ratio(-2, 1)), Some(ratio(1, 4)));
        assert!(ratio(2, 1).ln().is_err());
    }

    #[test]
    fn big_real_round_trip() {
        let q = ratio(-355, 113);
        let x = BigReal::from_ratio(&q);
        let back = x.to_ratio().unwrap();
        let diff = Signed::abs(&(back - &q));
        assert!(diff < ratio(1, 1_000_000_000_000_000));
        let two = BigReal::from_i64(2);
        let s = two.sqrt().unwrap();
        let err = (&s * &s - &two).abs();
        assert!(err < BigReal::from_f64(1e-70));
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(ratio_to_decimal(&ratio(1, 3), 4), "0.3333");
        assert_eq!(ratio_to_decimal(&ratio(-2, 3), 2), "-0.67");
        assert_eq!(ratio_to_decimal(&ratio(5, 1), 0), "5");
    }
}
