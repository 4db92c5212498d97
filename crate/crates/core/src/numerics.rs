//! Exact rational arithmetic.
//!
//! Every amount, price and reserve in the model is an exact rational, so state
//! transitions and valuations are bit-exact. [`sqrt_approx`] is the single
//! place where approximation enters: it is used only by the arbitrage formula.
//!
//! Three value types are provided:
//!
//! * [`Rational`], a signed rational, used for gains and intermediate values;
//! * [`NonNeg`], a rational that is `>= 0` (balances, supplies, prices of
//!   minted tokens);
//! * [`Pos`], a rational that is `> 0` (transaction amounts, reserves, oracle
//!   prices).
//!
//! All three serialize as `"num/den"` strings. Parsing also accepts bare
//! integers (`"5"`) and JSON integer literals.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use dashu_base::{Abs, Approximation, SquareRoot, UnsignedAbs};
use dashu_int::{IBig, UBig};
use dashu_ratio::RBig;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Exact, arbitrary-precision signed rational, always in lowest terms.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(RBig);

impl Rational {
    pub fn zero() -> Self {
        Rational(RBig::ZERO)
    }

    pub fn one() -> Self {
        Rational(RBig::ONE)
    }

    pub fn from_integer(n: i64) -> Self {
        Rational(RBig::from(n))
    }

    /// `num / den`. Fails on a zero denominator.
    pub fn from_ratio(num: i64, den: i64) -> Result<Self> {
        Self::from_bigints(IBig::from(num), IBig::from(den))
    }

    pub fn from_bigints(num: IBig, den: IBig) -> Result<Self> {
        if den == IBig::ZERO {
            return Err(Error::DivisionByZero);
        }
        Ok(Rational(RBig::from_parts_signed(num, den)))
    }

    pub fn numer(&self) -> &IBig {
        self.0.numerator()
    }

    pub fn denom(&self) -> &UBig {
        self.0.denominator()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0 > RBig::ZERO
    }

    pub fn is_negative(&self) -> bool {
        self.0 < RBig::ZERO
    }

    /// Ordering of `self` against zero.
    pub fn sign(&self) -> Ordering {
        self.0.cmp(&RBig::ZERO)
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.clone().abs())
    }

    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Rational(RBig::ONE / &self.0))
    }

    pub fn checked_div(&self, rhs: &Rational) -> Result<Self> {
        if rhs.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Rational(&self.0 / &rhs.0))
    }

    /// Largest multiple of `1/den` not above `self`.
    pub fn floor_to(&self, den: u64) -> Rational {
        assert!(den > 0, "floor_to: zero denominator");
        let d = UBig::from(den);
        let n = (&self.0 * RBig::from(d.clone())).floor();
        Rational(RBig::from_parts(n, d))
    }

    pub fn to_f64(&self) -> f64 {
        match self.0.to_f64() {
            Approximation::Exact(v) | Approximation::Inexact(v, _) => v,
        }
    }

    /// Decimal rendering rounded half away from zero to `digits` places.
    pub fn to_decimal_string(&self, digits: usize) -> String {
        let scale = UBig::from(10u8).pow(digits);
        let scaled = self.0.clone().abs() * RBig::from(scale.clone());
        // floor(v + 1/2) on a nonnegative value rounds half up
        let half = RBig::from_parts(IBig::ONE, UBig::from(2u8));
        let rounded = (scaled + half).floor();
        let scale = IBig::from(scale);
        let int_part = &rounded / &scale;
        let frac_part = &rounded % &scale;
        let sign = if self.is_negative() && rounded != IBig::ZERO {
            "-"
        } else {
            ""
        };
        if digits == 0 {
            format!("{sign}{int_part}")
        } else {
            format!(
                "{sign}{int_part}.{:0>width$}",
                frac_part.to_string(),
                width = digits
            )
        }
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numerator(), self.0.denominator())
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::ParseRational(s.to_string());
        let t = s.trim();
        let (num, den) = match t.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (t, "1"),
        };
        // Integer parsing accepts a leading '+'; keep the grammar strict.
        let ok = |p: &str, signed: bool| {
            let digits = if signed {
                p.strip_prefix('-').unwrap_or(p)
            } else {
                p
            };
            !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
        };
        if !ok(num, true) || !ok(den, false) {
            return Err(bad());
        }
        let n = IBig::from_str(num).map_err(|_| bad())?;
        let d = IBig::from_str(den).map_err(|_| bad())?;
        if d == IBig::ZERO {
            return Err(bad());
        }
        Rational::from_bigints(n, d)
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_integer(n)
    }
}

impl From<RBig> for Rational {
    fn from(r: RBig) -> Self {
        Rational(r)
    }
}

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

macro_rules! rational_op {
    ($Tr:ident, $m:ident) => {
        impl<'a, 'b> $Tr<&'b Rational> for &'a Rational {
            type Output = Rational;
            fn $m(self, rhs: &'b Rational) -> Rational {
                Rational((&self.0).$m(&rhs.0))
            }
        }
        impl $Tr<Rational> for Rational {
            type Output = Rational;
            fn $m(self, rhs: Rational) -> Rational {
                Rational(self.0.$m(rhs.0))
            }
        }
        impl<'b> $Tr<&'b Rational> for Rational {
            type Output = Rational;
            fn $m(self, rhs: &'b Rational) -> Rational {
                Rational(self.0.$m(&rhs.0))
            }
        }
    };
}

rational_op!(Add, add);
rational_op!(Sub, sub);
rational_op!(Mul, mul);
// Panics on a zero divisor, like integer division. Use `checked_div` when the
// divisor is not known to be nonzero.
rational_op!(Div, div);

impl std::iter::Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

struct RationalVisitor;

impl<'de> Visitor<'de> for RationalVisitor {
    type Value = Rational;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a rational as \"num/den\", \"num\", or an integer")
    }

    fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Rational, E> {
        v.parse().map_err(E::custom)
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Rational, E> {
        Ok(Rational::from_integer(v))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Rational, E> {
        Ok(Rational(RBig::from(v)))
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        d.deserialize_any(RationalVisitor)
    }
}

/// A rational `>= 0`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NonNeg(Rational);

/// A rational `> 0`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos(Rational);

impl NonNeg {
    pub fn new(r: Rational) -> Result<Self> {
        if r.is_negative() {
            return Err(Error::Negative(r));
        }
        Ok(NonNeg(r))
    }

    pub fn zero() -> Self {
        NonNeg(Rational::zero())
    }

    pub fn from_integer(n: u64) -> Self {
        NonNeg(Rational(RBig::from(n)))
    }

    pub fn from_ratio(num: u64, den: u64) -> Result<Self> {
        NonNeg::new(Rational::from_bigints(IBig::from(num), IBig::from(den))?)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn as_rational(&self) -> &Rational {
        &self.0
    }

    pub fn into_rational(self) -> Rational {
        self.0
    }

    /// `None` when zero.
    pub fn to_pos(&self) -> Option<Pos> {
        (!self.is_zero()).then(|| Pos(self.0.clone()))
    }

    /// Exact subtraction; a negative result is an error, never saturated.
    pub fn checked_sub(&self, rhs: &NonNeg) -> Result<NonNeg> {
        NonNeg::new(&self.0 - &rhs.0)
    }
}

impl Pos {
    pub fn new(r: Rational) -> Result<Self> {
        if !r.is_positive() {
            return Err(Error::NotPositive(r));
        }
        Ok(Pos(r))
    }

    pub fn one() -> Self {
        Pos(Rational::one())
    }

    /// Panics on zero; intended for literals.
    pub fn from_integer(n: u64) -> Self {
        assert!(n > 0, "Pos::from_integer(0)");
        Pos(Rational(RBig::from(n)))
    }

    pub fn from_ratio(num: u64, den: u64) -> Result<Self> {
        Pos::new(Rational::from_bigints(IBig::from(num), IBig::from(den))?)
    }

    pub fn as_rational(&self) -> &Rational {
        &self.0
    }

    pub fn into_rational(self) -> Rational {
        self.0
    }

    pub fn to_nonneg(&self) -> NonNeg {
        NonNeg(self.0.clone())
    }

    pub fn recip(&self) -> Pos {
        Pos(Rational(RBig::ONE / &self.0 .0))
    }

    /// `self - rhs`, failing unless the result stays strictly positive.
    pub fn checked_sub(&self, rhs: &Pos) -> Result<Pos> {
        Pos::new(&self.0 - &rhs.0)
    }
}

impl From<Pos> for NonNeg {
    fn from(p: Pos) -> NonNeg {
        NonNeg(p.0)
    }
}

impl From<NonNeg> for Rational {
    fn from(v: NonNeg) -> Rational {
        v.0
    }
}

impl From<Pos> for Rational {
    fn from(v: Pos) -> Rational {
        v.0
    }
}

impl TryFrom<Rational> for NonNeg {
    type Error = Error;
    fn try_from(r: Rational) -> Result<NonNeg> {
        NonNeg::new(r)
    }
}

impl TryFrom<Rational> for Pos {
    type Error = Error;
    fn try_from(r: Rational) -> Result<Pos> {
        Pos::new(r)
    }
}

macro_rules! closed_op {
    ($Tr:ident, $m:ident, $L:ident, $R:ident, $Out:ident) => {
        impl<'a, 'b> $Tr<&'b $R> for &'a $L {
            type Output = $Out;
            fn $m(self, rhs: &'b $R) -> $Out {
                $Out((&self.0).$m(&rhs.0))
            }
        }
        impl $Tr<$R> for $L {
            type Output = $Out;
            fn $m(self, rhs: $R) -> $Out {
                $Out(self.0.$m(rhs.0))
            }
        }
    };
}

closed_op!(Add, add, NonNeg, NonNeg, NonNeg);
closed_op!(Add, add, Pos, Pos, Pos);
closed_op!(Add, add, Pos, NonNeg, Pos);
closed_op!(Add, add, NonNeg, Pos, Pos);
closed_op!(Mul, mul, NonNeg, NonNeg, NonNeg);
closed_op!(Mul, mul, Pos, Pos, Pos);
closed_op!(Mul, mul, NonNeg, Pos, NonNeg);
closed_op!(Mul, mul, Pos, NonNeg, NonNeg);
closed_op!(Div, div, NonNeg, Pos, NonNeg);
closed_op!(Div, div, Pos, Pos, Pos);

impl std::iter::Sum for NonNeg {
    fn sum<I: Iterator<Item = NonNeg>>(iter: I) -> NonNeg {
        iter.fold(NonNeg::zero(), |acc, x| acc + x)
    }
}

macro_rules! display_serde {
    ($T:ident) => {
        impl fmt::Display for $T {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                fmt::Display::fmt(&self.0, f)
            }
        }
        impl fmt::Debug for $T {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                fmt::Display::fmt(&self.0, f)
            }
        }
        impl FromStr for $T {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                $T::new(s.parse()?)
            }
        }
        impl Serialize for $T {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                self.0.serialize(s)
            }
        }
        impl<'de> Deserialize<'de> for $T {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<$T, D::Error> {
                $T::new(Rational::deserialize(d)?).map_err(de::Error::custom)
            }
        }
    };
}

display_serde!(NonNeg);
display_serde!(Pos);

/// Default relative tolerance of [`sqrt_approx`]: `10^-18`.
pub fn default_sqrt_tol() -> Pos {
    Pos(Rational(RBig::from_parts(
        IBig::ONE,
        UBig::from(10u8).pow(18),
    )))
}

/// Square root of a nonnegative rational.
///
/// Returns `s` with `|s² - v| <= rel_tol * max(v, 1)`. When numerator and
/// denominator of `v` (in lowest terms) are both perfect squares the root is
/// returned exactly.
///
/// The approximation is `floor(sqrt(p·q·4^k)) / (q·2^k)` for `v = p/q`, which
/// never exceeds the true root; `k` doubles until the tolerance is met.
pub fn sqrt_approx(v: &NonNeg, rel_tol: &Pos) -> NonNeg {
    if v.is_zero() {
        return NonNeg::zero();
    }
    let p = v.0.numer().unsigned_abs();
    let q = v.0.denom().clone();

    let rp = p.sqrt();
    let rq = q.sqrt();
    if &rp * &rp == p && &rq * &rq == q {
        return NonNeg(ratio(rp, rq));
    }

    let one = Rational::one();
    let bound = rel_tol.as_rational() * std::cmp::max(v.as_rational(), &one);
    let pq = &p * &q;
    let mut k: usize = 64;
    loop {
        let t = (&pq << (2 * k)).sqrt();
        let s = ratio(t, &q << k);
        let err = v.as_rational() - &(&s * &s);
        debug_assert!(!err.is_negative());
        if err <= bound {
            return NonNeg(s);
        }
        k *= 2;
    }
}

fn ratio(num: UBig, den: UBig) -> Rational {
    Rational(RBig::from_parts(IBig::from(num), den))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_to_grid() {
        let r: Rational = "7/3".parse().unwrap();
        assert_eq!(r.floor_to(4), "9/4".parse().unwrap());
        assert_eq!((-r).floor_to(1), Rational::from_integer(-3));
        assert_eq!(
            Rational::from_ratio(1, 2).unwrap().floor_to(2),
            Rational::from_ratio(1, 2).unwrap()
        );
    }

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(r("6/4").to_string(), "3/2");
        assert_eq!(r("5").to_string(), "5/1");
        assert_eq!(r("-12/1").to_string(), "-12/1");
        assert_eq!(r(" 3 / 9 ").to_string(), "1/3");
        assert!("1/0".parse::<Rational>().is_err());
        assert!("abc".parse::<Rational>().is_err());
        assert!("+3".parse::<Rational>().is_err());
        assert!("1/-2".parse::<Rational>().is_err());
        assert!("".parse::<Rational>().is_err());
    }

    #[test]
    fn serde_accepts_integers_and_strings() {
        let v: Vec<Rational> = serde_json::from_str(r#"["3/2", "7", 4]"#).unwrap();
        assert_eq!(v, vec![r("3/2"), r("7"), r("4")]);
        assert_eq!(serde_json::to_string(&r("7")).unwrap(), r#""7/1""#);
        assert!(serde_json::from_str::<Pos>(r#""0""#).is_err());
        assert!(serde_json::from_str::<NonNeg>(r#""-1/2""#).is_err());
        assert!(serde_json::from_str::<NonNeg>(r#""0""#).is_ok());
    }

    #[test]
    fn constrained_constructors() {
        assert!(Pos::new(Rational::zero()).is_err());
        assert!(NonNeg::new(r("-1/3")).is_err());
        let a = NonNeg::from_integer(2);
        let b = NonNeg::from_integer(3);
        assert_eq!(a.checked_sub(&b), Err(Error::Negative(r("-1"))));
        assert_eq!(b.checked_sub(&a).unwrap(), NonNeg::from_integer(1));
        assert!(Pos::one().checked_sub(&Pos::one()).is_err());
    }

    #[test]
    fn decimals() {
        assert_eq!(r("2/3").to_decimal_string(4), "0.6667");
        assert_eq!(r("-12").to_decimal_string(2), "-12.00");
        assert_eq!(r("-1/1000").to_decimal_string(2), "0.00");
        assert_eq!(r("5/2").to_decimal_string(0), "3");
    }

    #[test]
    fn sqrt_of_zero_and_perfect_squares() {
        let tol = default_sqrt_tol();
        assert!(sqrt_approx(&NonNeg::zero(), &tol).is_zero());
        assert_eq!(
            sqrt_approx(&NonNeg::from_integer(81), &tol),
            NonNeg::from_integer(9)
        );
        assert_eq!(
            sqrt_approx(&NonNeg::from_ratio(49, 36).unwrap(), &tol),
            NonNeg::from_ratio(7, 6).unwrap()
        );
    }

    #[test]
    fn sqrt_two_against_newton() {
        let tol = default_sqrt_tol();
        let two = NonNeg::from_integer(2);
        let s = sqrt_approx(&two, &tol);
        let sq = s.as_rational() * s.as_rational();
        let err = (&sq - two.as_rational()).abs();
        assert!(err <= &Rational::from_integer(2) * tol.as_rational());

        // Newton on rationals, run to convergence well past the tolerance.
        let mut n = Rational::from_integer(1);
        for _ in 0..8 {
            n = (&n + &(two.as_rational() / &n)) / Rational::from_integer(2);
        }
        let diff = (&n - s.as_rational()).abs();
        assert!(
            diff <= tol.as_rational() * &Rational::from_integer(2),
            "diff {diff}"
        );
    }

    #[test]
    fn sqrt_loose_tolerance_for_tiny_values() {
        let tol = Pos::from_ratio(1, 1000).unwrap();
        let v = NonNeg::from_ratio(2, 10_000_000).unwrap();
        let s = sqrt_approx(&v, &tol);
        let err = (&(s.as_rational() * s.as_rational()) - v.as_rational()).abs();
        assert!(err <= *tol.as_rational());
    }
}
