//! Exact rational numbers and the extended-real wrapper used for one-sided
//! limits (`α(0⁻) = +∞`, `α(1⁺) = −∞`) and infinite price-of-anarchy values.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use malachite_base::num::arithmetic::traits::{CheckedSqrt, Floor, FloorSqrt, Pow, UnsignedAbs};
use malachite_base::num::basic::traits::{One, Zero};
use malachite_base::num::conversion::traits::RoundingFrom;
use malachite_base::rounding_modes::RoundingMode;
use malachite_nz::natural::Natural;
use malachite_q::Rational;

use crate::error::Error;

/// Exact rational scalar used for every position and money value.
pub type Q = Rational;

/// Decimal digits kept when a square root is not rational.
pub const SQRT_DIGITS: u32 = 40;

/// Sign predicates and absolute value by reference.
pub trait Signs {
    fn is_zero(&self) -> bool;
    fn is_positive(&self) -> bool;
    fn is_negative(&self) -> bool;
    fn abs(&self) -> Q;
}

impl Signs for Q {
    fn is_zero(&self) -> bool {
        *self == Q::ZERO
    }

    fn is_positive(&self) -> bool {
        *self > Q::ZERO
    }

    fn is_negative(&self) -> bool {
        *self < Q::ZERO
    }

    fn abs(&self) -> Q {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }
}

/// `num / den` as an exact rational. Panics on a zero denominator.
pub fn q(num: i64, den: i64) -> Q {
    Q::from_signeds(num, den)
}

/// The integer `n` as a rational.
pub fn qi(n: i64) -> Q {
    Q::from(n)
}

pub fn zero() -> Q {
    Q::ZERO
}

pub fn one() -> Q {
    Q::ONE
}

fn pow10(k: u64) -> Natural {
    Natural::from(10u32).pow(k)
}

/// Parses `"3"`, `"-0.125"`, `"1/3"`, `"2.5e-4"` into an exact rational.
pub fn parse_rational(text: &str) -> Result<Q, Error> {
    let s = text.trim();
    let bad = || Error::Parse(format!("not a rational number: {text:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if s.contains('/') {
        let (n, d) = s.split_once('/').ok_or_else(bad)?;
        let n = malachite_nz::integer::Integer::from_str(n.trim()).map_err(|_| bad())?;
        let d = malachite_nz::integer::Integer::from_str(d.trim()).map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Q::from_integers(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut value = Q::from(Natural::from_str(&all_digits).map_err(|_| bad())?);
    let scale = exponent - frac_part.len() as i32;
    if scale >= 0 {
        value *= Q::from(pow10(scale as u64));
    } else {
        value /= Q::from(pow10(u64::from(scale.unsigned_abs())));
    }
    Ok(if negative { -value } else { value })
}

/// Canonical text form: `"3"`, `"-1/8"`. Round-trips through [`parse_rational`].
pub fn format_rational(x: &Q) -> String {
    x.to_string()
}

pub fn to_f64(x: &Q) -> f64 {
    f64::rounding_from(x, RoundingMode::Nearest).0
}

/// `⌊x⌋` as a `usize`, or `None` when negative or too large.
pub fn floor_usize(x: &Q) -> Option<usize> {
    usize::try_from(&x.floor()).ok()
}

/// Exact square root when `x` is the square of a rational.
pub fn sqrt_exact(x: &Q) -> Option<Q> {
    if x.is_negative() {
        return None;
    }
    let (n, d) = x.to_numerator_and_denominator();
    Some(Q::from_naturals(n.checked_sqrt()?, d.checked_sqrt()?))
}

/// Largest multiple of `10^-digits` not exceeding `√x` (exact when possible).
pub fn sqrt_floor(x: &Q, digits: u32) -> Q {
    if let Some(r) = sqrt_exact(x) {
        return r;
    }
    if x.is_negative() {
        return Q::ZERO;
    }
    let scale = pow10(u64::from(digits));
    let scaled = (x * Q::from(&scale * &scale)).floor().unsigned_abs();
    Q::from_naturals(scaled.floor_sqrt(), scale)
}

/// Smallest multiple of `10^-digits` not below `√x` (exact when possible).
pub fn sqrt_ceil(x: &Q, digits: u32) -> Q {
    if let Some(r) = sqrt_exact(x) {
        return r;
    }
    sqrt_floor(x, digits) + Q::from_naturals(Natural::ONE, pow10(u64::from(digits)))
}

/// Compares `a` against `√b` exactly, for `a` of any sign and `b ≥ 0`.
pub fn cmp_with_sqrt(a: &Q, b: &Q) -> Ordering {
    if a.is_negative() {
        return Ordering::Less;
    }
    (a * a).cmp(b)
}

/// A rational extended with ±∞.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ext {
    NegInf,
    Finite(Q),
    PosInf,
}

impl Ext {
    pub fn finite(&self) -> Option<&Q> {
        match self {
            Ext::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Ext::Finite(_))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Ext::NegInf => f64::NEG_INFINITY,
            Ext::Finite(v) => to_f64(v),
            Ext::PosInf => f64::INFINITY,
        }
    }
}

impl From<Q> for Ext {
    fn from(v: Q) -> Self {
        Ext::Finite(v)
    }
}

impl PartialEq<Q> for Ext {
    fn eq(&self, other: &Q) -> bool {
        matches!(self, Ext::Finite(v) if v == other)
    }
}

impl PartialOrd<Q> for Ext {
    fn partial_cmp(&self, other: &Q) -> Option<Ordering> {
        Some(match self {
            Ext::NegInf => Ordering::Less,
            Ext::Finite(v) => v.cmp(other),
            Ext::PosInf => Ordering::Greater,
        })
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::NegInf => f.write_str("-inf"),
            Ext::Finite(v) => f.write_str(&format_rational(v)),
            Ext::PosInf => f.write_str("inf"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimals_fractions_and_exponents() {
        assert_eq!(parse_rational("0.12").unwrap(), q(3, 25));
        assert_eq!(parse_rational("-1/4").unwrap(), q(-1, 4));
        assert_eq!(parse_rational("1e-4").unwrap(), q(1, 10_000));
        assert_eq!(parse_rational("2.5E2").unwrap(), qi(250));
        assert_eq!(parse_rational(".5").unwrap(), q(1, 2));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("").is_err());
        assert!(parse_rational("-").is_err());
    }

    #[test]
    fn format_round_trips() {
        for v in [q(1, 3), qi(-7), q(22, 7), zero()] {
            assert_eq!(parse_rational(&format_rational(&v)).unwrap(), v);
        }
    }

    #[test]
    fn square_roots() {
        assert_eq!(sqrt_exact(&q(9, 4)), Some(q(3, 2)));
        assert_eq!(sqrt_exact(&qi(2)), None);
        let lo = sqrt_floor(&qi(2), 20);
        let hi = sqrt_ceil(&qi(2), 20);
        assert!(&lo * &lo < qi(2) && &hi * &hi > qi(2));
        assert!(hi - lo <= Q::from_naturals(Natural::ONE, pow10(20)));
        assert_eq!(cmp_with_sqrt(&q(1, 2), &q(1, 4)), Ordering::Equal);
        assert_eq!(cmp_with_sqrt(&q(-1, 2), &q(1, 4)), Ordering::Less);
    }

    #[test]
    fn extended_order() {
        assert!(Ext::NegInf < Ext::Finite(qi(-100)));
        assert!(Ext::Finite(qi(100)) < Ext::PosInf);
        assert!(Ext::PosInf > qi(5));
    }
}
