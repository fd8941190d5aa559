//! Exact fractions of a quarter note.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::DurationError;

/// A reduced fraction with a positive denominator.
///
/// Every constructor normalises, so structural equality is numeric equality
/// and the derived `Hash`/`Eq` are sound.
///
/// Serialized as `{"num": n, "den": d}` with 64-bit integers.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(try_from = "RawRational")]
pub struct Rational {
    num: i128,
    den: i128,
}

#[derive(Serialize, Deserialize)]
struct RawRational {
    num: i64,
    den: i64,
}

impl TryFrom<RawRational> for Rational {
    type Error = DurationError;

    fn try_from(raw: RawRational) -> Result<Self, Self::Error> {
        Rational::new(raw.num as i128, raw.den as i128)
    }
}

impl Serialize for Rational {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let raw = RawRational {
            num: i64::try_from(self.num).map_err(serde::ser::Error::custom)?,
            den: i64::try_from(self.den).map_err(serde::ser::Error::custom)?,
        };
        raw.serialize(serializer)
    }
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Rational {
    pub const ZERO: Rational = Rational { num: 0, den: 1 };
    pub const ONE: Rational = Rational { num: 1, den: 1 };

    pub fn new(num: i128, den: i128) -> Result<Self, DurationError> {
        if den == 0 {
            return Err(DurationError::ZeroDenominator);
        }
        let (num, den) = if den < 0 {
            (
                num.checked_neg().ok_or(DurationError::Overflow)?,
                den.checked_neg().ok_or(DurationError::Overflow)?,
            )
        } else {
            (num, den)
        };
        let g = gcd(num, den);
        Ok(Rational {
            num: num / g,
            den: den / g,
        })
    }

    /// Caller guarantees `den > 0` and `gcd(num, den) == 1`.
    pub(crate) const fn from_reduced(num: i128, den: i128) -> Self {
        Rational { num, den }
    }

    pub const fn from_integer(n: i128) -> Self {
        Rational { num: n, den: 1 }
    }

    pub fn numer(&self) -> i128 {
        self.num
    }

    pub fn denom(&self) -> i128 {
        self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn is_positive(&self) -> bool {
        self.num > 0
    }

    pub fn is_negative(&self) -> bool {
        self.num < 0
    }

    pub fn is_integer(&self) -> bool {
        self.den == 1
    }

    /// `2^exp` for any integer exponent.
    pub fn pow2(exp: i32) -> Self {
        if exp >= 0 {
            Rational::from_integer(1i128 << exp)
        } else {
            Rational {
                num: 1,
                den: 1i128 << (-exp),
            }
        }
    }

    /// Returns `Some(k)` when `self == 2^k`.
    pub fn log2_exact(&self) -> Option<i32> {
        let is_pow2 = |v: i128| v > 0 && v & (v - 1) == 0;
        if self.num == 1 && is_pow2(self.den) {
            Some(-(self.den.trailing_zeros() as i32))
        } else if self.den == 1 && is_pow2(self.num) {
            Some(self.num.trailing_zeros() as i32)
        } else {
            None
        }
    }

    pub fn checked_add(self, rhs: Self) -> Option<Self> {
        let g = gcd(self.den, rhs.den);
        let lhs_scale = rhs.den / g;
        let rhs_scale = self.den / g;
        let num = self
            .num
            .checked_mul(lhs_scale)?
            .checked_add(rhs.num.checked_mul(rhs_scale)?)?;
        let den = self.den.checked_mul(lhs_scale)?;
        Rational::new(num, den).ok()
    }

    pub fn checked_sub(self, rhs: Self) -> Option<Self> {
        self.checked_add(Rational {
            num: rhs.num.checked_neg()?,
            den: rhs.den,
        })
    }

    pub fn checked_mul(self, rhs: Self) -> Option<Self> {
        // cross-reduce first to keep intermediates small
        let g1 = gcd(self.num, rhs.den).max(1);
        let g2 = gcd(rhs.num, self.den).max(1);
        let num = (self.num / g1).checked_mul(rhs.num / g2)?;
        let den = (self.den / g2).checked_mul(rhs.den / g1)?;
        Rational::new(num, den).ok()
    }

    pub fn checked_div(self, rhs: Self) -> Option<Self> {
        if rhs.num == 0 {
            return None;
        }
        self.checked_mul(Rational::new(rhs.den, rhs.num).ok()?)
    }

    /// Multiply by an integer ratio `a / b` with `b != 0`.
    pub fn scale(self, a: i128, b: i128) -> Self {
        self * Rational::new(a, b).expect("scale by zero denominator")
    }

    pub fn abs(self) -> Self {
        Rational {
            num: self.num.abs(),
            den: self.den,
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Rational {
    type Err = DurationError;

    /// Accepts `n`, `n/d` and plain decimals such as `-0.5`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || DurationError::Unparsable(s.to_string());
        if let Some((n, d)) = s.split_once('/') {
            let n: i128 = n.trim().parse().map_err(|_| bad())?;
            let d: i128 = d.trim().parse().map_err(|_| bad())?;
            return Rational::new(n, d);
        }
        let (negative, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit())
            || frac_part.len() > 30
        {
            return Err(bad());
        }
        let digits = format!("{int_part}{frac_part}");
        let num: i128 = digits.parse().map_err(|_| bad())?;
        let den = 10i128.pow(frac_part.len() as u32);
        Rational::new(if negative { -num } else { num }, den)
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.den == other.den {
            return self.num.cmp(&other.num);
        }
        match (
            self.num.checked_mul(other.den),
            other.num.checked_mul(self.den),
        ) {
            (Some(a), Some(b)) => a.cmp(&b),
            _ => self
                .checked_sub(*other)
                .expect("rational comparison overflow")
                .num
                .cmp(&0),
        }
    }
}

impl Add for Rational {
    type Output = Rational;
    fn add(self, rhs: Self) -> Self {
        self.checked_add(rhs).expect("rational addition overflow")
    }
}

impl Sub for Rational {
    type Output = Rational;
    fn sub(self, rhs: Self) -> Self {
        self.checked_sub(rhs).expect("rational subtraction overflow")
    }
}

impl Mul for Rational {
    type Output = Rational;
    fn mul(self, rhs: Self) -> Self {
        self.checked_mul(rhs).expect("rational multiplication overflow")
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Self {
        Rational {
            num: -self.num,
            den: self.den,
        }
    }
}

impl AddAssign for Rational {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl SubAssign for Rational {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_integer(n as i128)
    }
}

impl std::iter::Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Self {
        iter.fold(Rational::ZERO, |acc, x| acc + x)
    }
}
