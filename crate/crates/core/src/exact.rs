//! Exact arithmetic substrate.
//!
//! Scalars are arbitrary-precision reduced rationals. Points of the Farey
//! triangle are stored as `i64` numerators over a shared positive `i64`
//! denominator so that the orbit hot loop stays allocation-free; every
//! product is formed in `i128`.

use std::collections::HashMap;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced rational with positive denominator.
pub type Rational = BigRational;

/// Largest shared denominator a [`FareyPoint`] may carry. Keeps `den + x`
/// and every intermediate of the BCZ step inside `i64`.
pub const MAX_POINT_DEN: i64 = 1 << 62;

/// Builds the reduced rational `num/den`.
pub fn rational_reduce(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Result<Rational> {
    let den = den.into();
    if den.is_zero() {
        return Err(Error::ZeroDenominator);
    }
    Ok(BigRational::new(num.into(), den))
}

/// Shorthand for small literals. Panics on a zero denominator.
pub fn rat(num: i64, den: i64) -> Rational {
    rational_reduce(num, den).expect("nonzero denominator")
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Parses `p/q`, `p` or a finite decimal such as `0.25`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::InvalidArgument(format!("cannot parse rational from {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        return rational_reduce(n, d);
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = whole.starts_with('-');
        let digits = format!("{}{}", whole.trim_start_matches(['-', '+']), frac);
        let mut num = BigInt::from_str(&digits).map_err(|_| bad())?;
        if negative {
            num = -num;
        }
        return rational_reduce(num, BigInt::from(10u32).pow(frac.len() as u32));
    }
    let n = BigInt::from_str(s).map_err(|_| bad())?;
    Ok(Rational::from_integer(n))
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// `floor(r)` as an `i64`, if it fits.
pub fn floor_i64(r: &Rational) -> Option<i64> {
    r.floor().to_integer().to_i64()
}

/// Scaled-integer point `(x_num/den, y_num/den)`.
///
/// The type carries any point with a positive denominator; membership in the
/// Farey triangle is a separate predicate because callers (and tests) need to
/// talk about points just outside it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FareyPoint {
    x_num: i64,
    y_num: i64,
    den: i64,
}

impl FareyPoint {
    pub fn new(x_num: i64, y_num: i64, den: i64) -> Result<Self> {
        if den <= 0 {
            return Err(if den == 0 {
                Error::ZeroDenominator
            } else {
                Error::NonPositive(format!("denominator {den}"))
            });
        }
        if den > MAX_POINT_DEN
            || x_num.unsigned_abs() > MAX_POINT_DEN as u64
            || y_num.unsigned_abs() > MAX_POINT_DEN as u64
        {
            return Err(Error::Overflow(format!(
                "point ({x_num}, {y_num}) / {den} exceeds 2^62"
            )));
        }
        Ok(FareyPoint { x_num, y_num, den })
    }

    /// Validated constructor: errors unless the point is in the triangle.
    pub fn in_triangle(x_num: i64, y_num: i64, den: i64) -> Result<Self> {
        let p = Self::new(x_num, y_num, den)?;
        if !p.is_in_triangle() {
            return Err(Error::NotInTriangle(p));
        }
        Ok(p)
    }

    /// Puts two rationals over their least common denominator.
    pub fn from_rationals(a: &Rational, b: &Rational) -> Result<Self> {
        let den = a.denom().lcm(b.denom());
        let x = a.numer() * (&den / a.denom());
        let y = b.numer() * (&den / b.denom());
        let fit = |v: &BigInt| {
            v.to_i64()
                .ok_or_else(|| Error::Overflow(format!("({a}, {b}) needs denominator {den}")))
        };
        Self::new(fit(&x)?, fit(&y)?, fit(&den)?)
    }

    #[inline]
    pub(crate) const fn raw(x_num: i64, y_num: i64, den: i64) -> Self {
        FareyPoint { x_num, y_num, den }
    }

    #[inline]
    pub fn x_num(&self) -> i64 {
        self.x_num
    }

    #[inline]
    pub fn y_num(&self) -> i64 {
        self.y_num
    }

    #[inline]
    pub fn den(&self) -> i64 {
        self.den
    }

    pub fn a(&self) -> Rational {
        rat(self.x_num, self.den)
    }

    pub fn b(&self) -> Rational {
        rat(self.y_num, self.den)
    }

    /// `0 < a <= 1`, `0 < b <= 1`, `a + b > 1`, by integer comparison.
    #[inline]
    pub fn is_in_triangle(&self) -> bool {
        self.x_num > 0
            && self.y_num > 0
            && self.x_num <= self.den
            && self.y_num <= self.den
            && self.x_num + self.y_num > self.den
    }

    /// `(b, a)`.
    #[inline]
    pub fn swapped(&self) -> Self {
        FareyPoint::raw(self.y_num, self.x_num, self.den)
    }

    /// Value equality, independent of the chosen denominator.
    pub fn same_value(&self, other: &FareyPoint) -> bool {
        let (d1, d2) = (self.den as i128, other.den as i128);
        self.x_num as i128 * d2 == other.x_num as i128 * d1
            && self.y_num as i128 * d2 == other.y_num as i128 * d1
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (
            self.x_num as f64 / self.den as f64,
            self.y_num as f64 / self.den as f64,
        )
    }
}

impl fmt::Display for FareyPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.a(), self.b())
    }
}

pub fn in_farey_triangle(p: &FareyPoint) -> bool {
    p.is_in_triangle()
}

/// Membership in the golden-ratio region `b/a ∈ [(√5−1)/2, (√5+1)/2]`.
///
/// With `x = b/a > 0` the two bounds read `x² + x − 1 >= 0` and
/// `x² − x − 1 <= 0`; multiplying through by `a²` gives integer-exact tests.
pub fn in_golden_region(a: &Rational, b: &Rational) -> Result<bool> {
    if !a.is_positive() {
        return Err(Error::NonPositive(format!("a = {a}")));
    }
    if !b.is_positive() {
        return Err(Error::NonPositive(format!("b = {b}")));
    }
    let (aa, bb, ab) = (a * a, b * b, a * b);
    let lower = &bb + &ab - &aa;
    let upper = &bb - &ab - &aa;
    Ok(!lower.is_negative() && !upper.is_positive())
}

/// An exact half-integer, stored as twice its value.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct HalfInteger {
    twice: i128,
}

impl HalfInteger {
    pub const ZERO: HalfInteger = HalfInteger { twice: 0 };

    #[inline]
    pub const fn from_twice(twice: i128) -> Self {
        HalfInteger { twice }
    }

    #[inline]
    pub const fn from_integer(v: i128) -> Self {
        HalfInteger { twice: 2 * v }
    }

    #[inline]
    pub const fn twice_value(&self) -> i128 {
        self.twice
    }

    #[inline]
    pub const fn abs(&self) -> Self {
        HalfInteger {
            twice: self.twice.abs(),
        }
    }

    #[inline]
    pub const fn is_integer(&self) -> bool {
        self.twice % 2 == 0
    }

    pub fn to_rational(&self) -> Rational {
        rational_reduce(BigInt::from(self.twice), 2).expect("nonzero")
    }

    pub fn to_f64(&self) -> f64 {
        self.twice as f64 / 2.0
    }
}

impl Add for HalfInteger {
    type Output = HalfInteger;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        HalfInteger {
            twice: self.twice + rhs.twice,
        }
    }
}

impl Sub for HalfInteger {
    type Output = HalfInteger;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        HalfInteger {
            twice: self.twice - rhs.twice,
        }
    }
}

impl Neg for HalfInteger {
    type Output = HalfInteger;
    #[inline]
    fn neg(self) -> Self {
        HalfInteger { twice: -self.twice }
    }
}

impl AddAssign for HalfInteger {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        self.twice += rhs.twice;
    }
}

impl SubAssign for HalfInteger {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        self.twice -= rhs.twice;
    }
}

impl Sum for HalfInteger {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(HalfInteger::ZERO, |acc, x| acc + x)
    }
}

impl fmt::Display for HalfInteger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

/// Exact sum of many rationals.
///
/// Terms are bucketed by denominator and added as integers; the buckets are
/// folded into a single rational only when there are too many of them. Long
/// sums whose terms share a handful of denominators (the usual case along a
/// Farey orbit) then avoid a big-integer gcd per term.
#[derive(Clone, Debug, Default)]
pub struct ExactSum {
    buckets: HashMap<BigInt, BigInt>,
    folded: Rational,
}

impl ExactSum {
    const MAX_BUCKETS: usize = 1 << 12;

    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, r: &Rational) {
        if r.is_zero() {
            return;
        }
        *self
            .buckets
            .entry(r.denom().clone())
            .or_insert_with(BigInt::zero) += r.numer();
        if self.buckets.len() > Self::MAX_BUCKETS {
            self.fold();
        }
    }

    /// Adds `num/den` without building the rational first.
    pub fn add_parts(&mut self, num: BigInt, den: BigInt) {
        debug_assert!(den.is_positive());
        if num.is_zero() {
            return;
        }
        *self.buckets.entry(den).or_insert_with(BigInt::zero) += num;
        if self.buckets.len() > Self::MAX_BUCKETS {
            self.fold();
        }
    }

    fn fold(&mut self) {
        // Common denominator of all buckets, then one reduction.
        let mut den = BigInt::one();
        for d in self.buckets.keys() {
            den = den.lcm(d);
        }
        let mut num = BigInt::zero();
        for (d, n) in self.buckets.drain() {
            num += n * (&den / d);
        }
        self.folded += BigRational::new(num, den);
    }

    pub fn total(mut self) -> Rational {
        self.fold();
        self.folded
    }
}

impl Sum<Rational> for ExactSum {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Self {
        let mut acc = ExactSum::new();
        for r in iter {
            acc.add(&r);
        }
        acc
    }
}
