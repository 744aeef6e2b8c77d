//! Number backends.
//!
//! Every algorithm in the crate is generic over [`Scalar`]. Three backends ship:
//!
//! - `f64`: the default working type.
//! - [`BigRational`]: exact arithmetic, used wherever an identity must hold with
//!   zero error (jump operators on q-scales, polynomial derivative chains).
//! - [`BigFloat`]: binary floating point with a fixed number of mantissa bits,
//!   used when cancellation in nested q-difference quotients would swamp `f64`.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

/// Field operations plus the few conversions the engine needs.
pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Send
    + Sync
    + Serialize
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    /// Conversion from a binary double. Exact for the rational backend.
    fn from_f64(x: f64) -> Self;
    fn from_i64(n: i64) -> Self;
    fn to_f64(&self) -> f64;
    /// The exact rational value.
    fn to_rational(&self) -> BigRational;
    /// Decimal rendering with roughly `digits` significant digits.
    fn render(&self, digits: usize) -> String;

    /// Parse a decimal literal such as `0.3` or `1e-12`, as closely as the
    /// backend allows.
    fn parse_decimal(s: &str) -> Option<Self> {
        s.trim().parse::<f64>().ok().filter(|v| v.is_finite()).map(Self::from_f64)
    }

    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }

    fn abs(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// Integer power by repeated squaring; negative exponents invert.
    fn powi(&self, k: i32) -> Self {
        let mut base = self.clone();
        let mut e = k.unsigned_abs();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            e >>= 1;
            if e > 0 {
                base = base.clone() * base;
            }
        }
        if k < 0 {
            Self::one() / acc
        } else {
            acc
        }
    }

    fn max_of(a: Self, b: Self) -> Self {
        if a >= b {
            a
        } else {
            b
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if a <= b {
            a
        } else {
            b
        }
    }
}

/// Backends that can raise to a real power.
pub trait Real: Scalar {
    fn powf(&self, exponent: &Self) -> Self;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn from_i64(n: i64) -> Self {
        n as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn to_rational(&self) -> BigRational {
        BigRational::from_float(*self).expect("finite value")
    }
    fn render(&self, digits: usize) -> String {
        let digits = digits.clamp(1, 17);
        format!("{:.*e}", digits - 1, self)
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn powi(&self, k: i32) -> Self {
        f64::powi(*self, k)
    }
}

impl Real for f64 {
    fn powf(&self, exponent: &Self) -> Self {
        f64::powf(*self, *exponent)
    }
}

impl Scalar for BigRational {
    fn zero() -> Self {
        <BigRational as Zero>::zero()
    }
    fn one() -> Self {
        BigRational::from_integer(BigInt::from(1))
    }
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite value")
    }
    fn from_i64(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn to_rational(&self) -> BigRational {
        self.clone()
    }
    fn render(&self, _digits: usize) -> String {
        self.to_string()
    }
    fn parse_decimal(s: &str) -> Option<Self> {
        let d: dashu_float::DBig = s.trim().parse().ok()?;
        let repr = d.repr();
        let mantissa: BigInt = repr.significand().to_string().parse().ok()?;
        let ten = BigRational::from_integer(BigInt::from(10));
        Some(BigRational::from_integer(mantissa) * Scalar::powi(&ten, i32::try_from(repr.exponent()).ok()?))
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
}

/// Binary floating point with `BITS` mantissa bits and round-half-even.
#[derive(Clone, Debug, PartialEq, PartialOrd)]
pub struct BigFloat<const BITS: usize>(FBig<HalfEven, 2>);

/// 128 mantissa bits, about 38 decimal digits.
pub type F128 = BigFloat<128>;
/// 256 mantissa bits, about 77 decimal digits.
pub type F256 = BigFloat<256>;
/// 512 mantissa bits, about 154 decimal digits.
pub type F512 = BigFloat<512>;

impl<const BITS: usize> BigFloat<BITS> {
    fn wrap(v: FBig<HalfEven, 2>) -> Self {
        BigFloat(v.with_precision(BITS).value())
    }

    /// Parse a decimal literal, rounding to the working precision.
    pub fn parse(s: &str) -> Option<Self> {
        let d: dashu_float::DBig = s.trim().parse().ok()?;
        let bits = d.with_precision(BITS.div_ceil(3) + 4).value();
        Some(Self::wrap(bits.with_base_and_precision::<2>(BITS).value().with_rounding()))
    }

    pub const fn bits() -> usize {
        BITS
    }

    /// Decimal digits carried by the mantissa.
    pub fn decimal_digits() -> usize {
        (BITS as f64 * std::f64::consts::LOG10_2).floor() as usize
    }
}

impl<const BITS: usize> Serialize for BigFloat<BITS> {
    fn serialize<Se: Serializer>(&self, serializer: Se) -> Result<Se::Ok, Se::Error> {
        serializer.serialize_str(&self.render(Self::decimal_digits()))
    }
}

impl<const BITS: usize> Add for BigFloat<BITS> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::wrap(self.0 + rhs.0)
    }
}

impl<const BITS: usize> Sub for BigFloat<BITS> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::wrap(self.0 - rhs.0)
    }
}

impl<const BITS: usize> Mul for BigFloat<BITS> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::wrap(self.0 * rhs.0)
    }
}

impl<const BITS: usize> Div for BigFloat<BITS> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        Self::wrap(self.0 / rhs.0)
    }
}

impl<const BITS: usize> Neg for BigFloat<BITS> {
    type Output = Self;
    fn neg(self) -> Self {
        BigFloat(-self.0)
    }
}

impl<const BITS: usize> Scalar for BigFloat<BITS> {
    fn zero() -> Self {
        Self::wrap(FBig::from(0u8))
    }
    fn one() -> Self {
        Self::wrap(FBig::from(1u8))
    }
    fn from_f64(x: f64) -> Self {
        Self::wrap(FBig::try_from(x).expect("finite value"))
    }
    fn from_i64(n: i64) -> Self {
        Self::wrap(FBig::from(n))
    }
    fn to_f64(&self) -> f64 {
        self.0.to_f64().value()
    }
    fn parse_decimal(s: &str) -> Option<Self> {
        Self::parse(s)
    }
    fn to_rational(&self) -> BigRational {
        let repr = self.0.repr();
        let mantissa: BigInt = repr.significand().to_string().parse().expect("integer significand");
        let exp = repr.exponent();
        let two = BigRational::from_integer(BigInt::from(2));
        BigRational::from_integer(mantissa) * Scalar::powi(&two, exp as i32)
    }
    fn render(&self, digits: usize) -> String {
        let digits = digits.max(1);
        if self.0.repr().significand().is_zero() {
            return "0".to_string();
        }
        let dec = self.0.to_decimal().value().with_precision(digits).value();
        dec.to_string()
    }
    fn is_zero(&self) -> bool {
        self.0.repr().significand().is_zero()
    }
}

impl<const BITS: usize> Real for BigFloat<BITS> {
    fn powf(&self, exponent: &Self) -> Self {
        Self::wrap(self.0.powf(&exponent.0))
    }
}

/// Guard digits added on top of the requested output precision.
pub const GUARD_DIGITS: usize = 10;

/// Concrete backend for a requested number of significant decimal digits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    F64,
    F128,
    F256,
    F512,
}

impl Backend {
    /// The cheapest backend carrying `requested + GUARD_DIGITS` digits.
    pub fn for_digits(requested: usize) -> Option<Backend> {
        let working = requested + GUARD_DIGITS;
        if working <= 15 {
            Some(Backend::F64)
        } else if working <= F128::decimal_digits() {
            Some(Backend::F128)
        } else if working <= F256::decimal_digits() {
            Some(Backend::F256)
        } else if working <= F512::decimal_digits() {
            Some(Backend::F512)
        } else {
            None
        }
    }
}

/// Exact rational equal to the binary value of `x`.
pub fn exact_rational(x: f64) -> BigRational {
    BigRational::from_f64(x)
}

/// Relative distance `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn relative_error<S: Scalar>(a: &S, b: &S) -> S {
    let scale = S::max_of(a.abs(), b.abs());
    if scale.is_zero() {
        S::zero()
    } else {
        (a.clone() - b.clone()).abs() / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_parsing_per_backend() {
        let r = <BigRational as Scalar>::parse_decimal("0.3").unwrap();
        assert_eq!(r, BigRational::new(BigInt::from(3), BigInt::from(10)));
        let r = <BigRational as Scalar>::parse_decimal("-2.5e-3").unwrap();
        assert_eq!(r, BigRational::new(BigInt::from(-1), BigInt::from(400)));
        assert_eq!(<f64 as Scalar>::parse_decimal("0.3"), Some(0.3));
        assert_eq!(<f64 as Scalar>::parse_decimal("inf"), None);
        assert_eq!(F128::parse_decimal("x"), None);
        let q = F128::parse_decimal("0.3").unwrap();
        assert!(relative_error(&q.to_rational(), &BigRational::new(BigInt::from(3), BigInt::from(10))) < BigRational::new(BigInt::from(1), BigInt::from(10).pow(37)));
    }

    #[test]
    fn powi_matches_repeated_products() {
        let q = BigRational::new(BigInt::from(3), BigInt::from(10));
        let cube = q.clone() * q.clone() * q.clone();
        assert_eq!(Scalar::powi(&q, 3), cube);
        assert_eq!(Scalar::powi(&q, -2), BigRational::from_i64(100) / BigRational::from_i64(9));
        assert_eq!(Scalar::powi(&q, 0), <BigRational as Scalar>::one());
    }

    #[test]
    fn bigfloat_carries_more_than_double() {
        let third = F128::one() / F128::from_i64(3);
        let back = third.clone() * F128::from_i64(3);
        assert!((back - F128::one()).abs() < F128::from_f64(1e-35));
        // 1/3 in f64 differs from the 128-bit value beyond the 17th digit
        let diff = (third - F128::from_f64(1.0 / 3.0)).abs();
        assert!(diff > F128::from_f64(1e-20));
        assert!(diff < F128::from_f64(1e-16));
    }

    #[test]
    fn bigfloat_parse_and_render() {
        let x = F256::parse("0.1").unwrap();
        assert_eq!(x.render(20), "0.1");
        let err = (x * F256::from_i64(10) - F256::one()).abs();
        assert!(err < F256::parse("1e-70").unwrap());
        assert!(F128::parse("2.5e-3").unwrap().render(3).starts_with("0.0025"));
        assert_eq!(F128::zero().render(5), "0");
        assert_eq!(F128::decimal_digits(), 38);
    }

    #[test]
    fn bigfloat_powf_agrees_with_f64() {
        let q = F128::from_f64(0.5);
        let v = q.powf(&F128::from_f64(3.5));
        assert!((v.to_f64() - 0.5f64.powf(3.5)).abs() < 1e-15);
    }

    #[test]
    fn exact_rational_values() {
        let x = F128::parse("0.3").unwrap();
        let r = x.to_rational();
        let back = BigRational::from_integer(BigInt::from(3)) / BigRational::from_integer(BigInt::from(10));
        let err = Signed::abs(&(r.clone() - back));
        assert!(err < BigRational::new(BigInt::from(1), BigInt::from(10).pow(38)));
        assert!(!Zero::is_zero(&(r - BigRational::from_f64(0.3))));
        assert_eq!(0.375f64.to_rational(), BigRational::new(BigInt::from(3), BigInt::from(8)));
        assert_eq!(F128::from_f64(-2.5).to_rational(), BigRational::new(BigInt::from(-5), BigInt::from(2)));
        assert_eq!(F128::zero().to_rational(), <BigRational as Scalar>::zero());
    }

    #[test]
    fn backend_choice_adds_guard_digits() {
        assert_eq!(Backend::for_digits(5), Some(Backend::F64));
        assert_eq!(Backend::for_digits(6), Some(Backend::F128));
        assert_eq!(Backend::for_digits(28), Some(Backend::F128));
        assert_eq!(Backend::for_digits(29), Some(Backend::F256));
        assert_eq!(Backend::for_digits(100), Some(Backend::F512));
        assert_eq!(Backend::for_digits(200), None);
    }

    #[test]
    fn relative_error_handles_zero() {
        assert_eq!(relative_error(&0.0, &0.0), 0.0);
        assert!((relative_error(&1.0, &1.1) - 0.1 / 1.1).abs() < 1e-15);
    }
}
