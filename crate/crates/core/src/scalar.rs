//! Numbers that stay exact while every input is rational.
//!
//! A [`Scalar`] is either an exact [`BigRational`] or an `f64`. Arithmetic
//! between two exact values stays exact; as soon as a float participates the
//! result is a float. Zero and sign tests on floats use [`FLOAT_TOL`].

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Absolute tolerance for equality and sign tests in float mode.
pub const FLOAT_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub enum Scalar {
    Exact(BigRational),
    Float(f64),
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar::Exact(BigRational::zero())
    }

    pub fn one() -> Self {
        Scalar::Exact(BigRational::one())
    }

    pub fn int(n: i64) -> Self {
        Scalar::Exact(BigRational::from_integer(BigInt::from(n)))
    }

    /// Exact `num / den`. Panics if `den == 0`.
    pub fn ratio(num: i64, den: i64) -> Self {
        Scalar::Exact(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn float(x: f64) -> Self {
        Scalar::Float(x)
    }

    /// Parses `"3"`, `"-2/7"` or a decimal such as `"0.25"` exactly.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            return Some(Scalar::Exact(BigRational::new(n, d)));
        }
        if let Ok(n) = s.parse::<BigInt>() {
            return Some(Scalar::Exact(BigRational::from_integer(n)));
        }
        // finite decimal without exponent: exact
        let (neg, body) = match s.strip_prefix('-') {
            Some(b) => (true, b),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        if let Some((ip, fp)) = body.split_once('.') {
            if !ip.is_empty() || !fp.is_empty() {
                let digits = format!("{ip}{fp}");
                if !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit()) {
                    let n: BigInt = digits.parse().ok()?;
                    let d = num_traits::pow(BigInt::from(10), fp.len());
                    let r = BigRational::new(if neg { -n } else { n }, d);
                    return Some(Scalar::Exact(r));
                }
            }
        }
        s.parse::<f64>().ok().filter(|x| x.is_finite()).map(Scalar::Float)
    }

    /// Converts a JSON-level float to the simplest exact value when the
    /// shortest decimal representation is short; otherwise keeps a float.
    pub fn from_f64_lossless(x: f64) -> Self {
        if x.is_finite() {
            let repr = format!("{x}");
            if repr.len() <= 18 && !repr.contains('e') {
                if let Some(s) = Scalar::parse(&repr) {
                    return s;
                }
            }
        }
        Scalar::Float(x)
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(r) => rational_to_f64(r),
            Scalar::Float(x) => *x,
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Scalar::Exact(r) => Some(r),
            Scalar::Float(_) => None,
        }
    }

    /// Exact zero for rationals, `|x| <= FLOAT_TOL` for floats.
    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(r) => r.is_zero(),
            Scalar::Float(x) => x.abs() <= FLOAT_TOL,
        }
    }

    /// Structural zero: exact zero or a float that is exactly `0.0`.
    pub fn is_exact_zero(&self) -> bool {
        match self {
            Scalar::Exact(r) => r.is_zero(),
            Scalar::Float(x) => *x == 0.0,
        }
    }

    /// Sign with the float tolerance applied: -1, 0 or 1.
    pub fn sign(&self) -> i32 {
        match self {
            Scalar::Exact(r) => {
                if r.is_zero() {
                    0
                } else if r.is_positive() {
                    1
                } else {
                    -1
                }
            }
            Scalar::Float(x) => {
                if x.abs() <= FLOAT_TOL {
                    0
                } else if *x > 0.0 {
                    1
                } else {
                    -1
                }
            }
        }
    }

    pub fn abs(&self) -> Self {
        match self {
            Scalar::Exact(r) => Scalar::Exact(r.abs()),
            Scalar::Float(x) => Scalar::Float(x.abs()),
        }
    }

    pub fn recip(&self) -> Self {
        Scalar::one() / self.clone()
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut acc = Scalar::one();
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// Total order; floats compare by value, NaN sorts last.
    pub fn cmp_value(&self, other: &Scalar) -> Ordering {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a.cmp(b),
            _ => self
                .to_f64()
                .partial_cmp(&other.to_f64())
                .unwrap_or(Ordering::Greater),
        }
    }

    /// Equality under the mode's rule (exact, or absolute `FLOAT_TOL`).
    pub fn approx_eq(&self, other: &Scalar) -> bool {
        (self - other).is_zero()
    }
}

fn rational_to_f64(r: &BigRational) -> f64 {
    if let Some(x) = r.to_f64() {
        if x.is_finite() {
            return x;
        }
    }
    // Fallback for huge numerators/denominators: scale down both.
    let n = r.numer();
    let d = r.denom();
    let shift = (n.bits().max(d.bits())).saturating_sub(1000);
    let n = (n >> shift).to_f64().unwrap_or(f64::NAN);
    let d = (d >> shift).to_f64().unwrap_or(f64::NAN);
    n / d
}

impl Default for Scalar {
    fn default() -> Self {
        Scalar::zero()
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Self {
        Scalar::int(n)
    }
}

impl From<BigRational> for Scalar {
    fn from(r: BigRational) -> Self {
        Scalar::Exact(r)
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a == b,
            _ => self.to_f64() == other.to_f64(),
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(r) => {
                if r.is_integer() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Scalar::Float(x) => write!(f, "{x}"),
        }
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $op:tt) => {
        impl<'a, 'b> $tr<&'b Scalar> for &'a Scalar {
            type Output = Scalar;
            fn $m(self, rhs: &'b Scalar) -> Scalar {
                match (self, rhs) {
                    (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a $op b),
                    _ => Scalar::Float(self.to_f64() $op rhs.to_f64()),
                }
            }
        }
        impl $tr<Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, rhs: Scalar) -> Scalar {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, rhs: &'a Scalar) -> Scalar {
                (&self).$m(rhs)
            }
        }
        impl<'a> $tr<Scalar> for &'a Scalar {
            type Output = Scalar;
            fn $m(self, rhs: Scalar) -> Scalar {
                self.$m(&rhs)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl<'a, 'b> Div<&'b Scalar> for &'a Scalar {
    type Output = Scalar;
    fn div(self, rhs: &'b Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => {
                assert!(!b.is_zero(), "exact division by zero");
                Scalar::Exact(a / b)
            }
            _ => Scalar::Float(self.to_f64() / rhs.to_f64()),
        }
    }
}

impl Div<Scalar> for Scalar {
    type Output = Scalar;
    fn div(self, rhs: Scalar) -> Scalar {
        &self / &rhs
    }
}

impl<'a> Div<&'a Scalar> for Scalar {
    type Output = Scalar;
    fn div(self, rhs: &'a Scalar) -> Scalar {
        &self / rhs
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Exact(r) => Scalar::Exact(-r),
            Scalar::Float(x) => Scalar::Float(-x),
        }
    }
}

impl<'a> Neg for &'a Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -(self.clone())
    }
}

impl std::iter::Sum for Scalar {
    fn sum<I: Iterator<Item = Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::zero(), |a, b| a + b)
    }
}

// Exact values serialize as strings ("p/q"), floats as JSON numbers.
impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Scalar::Exact(r) if r.is_integer() => match r.numer().to_i64() {
                Some(n) => s.serialize_i64(n),
                None => s.serialize_str(&self.to_string()),
            },
            Scalar::Exact(_) => s.serialize_str(&self.to_string()),
            Scalar::Float(x) => s.serialize_f64(*x),
        }
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(n) => Ok(Scalar::int(n)),
            Raw::Num(x) => Ok(Scalar::from_f64_lossless(x)),
            Raw::Str(s) => Scalar::parse(&s)
                .ok_or_else(|| serde::de::Error::custom(format!("invalid number `{s}`"))),
        }
    }
}

pub fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Converts a slice of floats to float scalars.
pub fn floats(xs: &[f64]) -> Vec<Scalar> {
    xs.iter().map(|&x| Scalar::Float(x)).collect()
}

pub fn to_f64_vec(xs: &[Scalar]) -> Vec<f64> {
    xs.iter().map(Scalar::to_f64).collect()
}

pub fn dot(a: &[Scalar], b: &[Scalar]) -> Scalar {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_stays_exact() {
        let a = Scalar::ratio(1, 3);
        let b = Scalar::ratio(1, 6);
        let c = &a + &b;
        assert_eq!(c, Scalar::ratio(1, 2));
        assert!(c.is_exact());
        let d = c * Scalar::Float(2.0);
        assert!(!d.is_exact());
        assert_eq!(d.to_f64(), 1.0);
    }

    #[test]
    fn parse_forms() {
        assert_eq!(Scalar::parse("-2/4").unwrap(), Scalar::ratio(-1, 2));
        assert_eq!(Scalar::parse("0.25").unwrap(), Scalar::ratio(1, 4));
        assert_eq!(Scalar::parse("7").unwrap(), Scalar::int(7));
        assert!(!Scalar::parse("1e-3").unwrap().is_exact());
        assert!(Scalar::parse("1/0").is_none());
        assert_eq!(Scalar::from_f64_lossless(0.1), Scalar::ratio(1, 10));
    }

    #[test]
    fn float_tolerance_sign() {
        assert_eq!(Scalar::Float(1e-12).sign(), 0);
        assert_eq!(Scalar::Float(-1e-3).sign(), -1);
        assert_eq!(Scalar::ratio(-1, 1_000_000_000).sign(), -1);
    }

    #[test]
    fn serde_roundtrip() {
        let xs = vec![Scalar::ratio(3, 7), Scalar::int(-4), Scalar::Float(0.5f64.sqrt())];
        let s = serde_json::to_string(&xs).unwrap();
        let back: Vec<Scalar> = serde_json::from_str(&s).unwrap();
        assert_eq!(xs, back);
        assert!(back[0].is_exact());
    }
}
