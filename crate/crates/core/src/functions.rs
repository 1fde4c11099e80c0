//! Exact functions on the Farey triangle: the return time, the itinerary
//! average, the `g_λ` family and rectangle step functions.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::bcz::{itinerary, itinerary_transpose, khat};
use crate::error::{Error, Result};
use crate::exact::FareyPoint;
use crate::exact::{int, parse_rational, Rational};

/// A total, exact function on triangle points.
pub trait PointFunction: Sync {
    fn eval(&self, p: &FareyPoint) -> Rational;
}

impl<F> PointFunction for F
where
    F: Fn(&FareyPoint) -> Rational + Sync,
{
    fn eval(&self, p: &FareyPoint) -> Rational {
        self(p)
    }
}

/// `R(a, b) = 1/(ab)`.
pub fn return_time(p: &FareyPoint) -> Rational {
    let d = BigInt::from(p.den());
    Rational::new(&d * &d, BigInt::from(p.x_num()) * BigInt::from(p.y_num()))
}

pub fn khat_rational(p: &FareyPoint) -> Rational {
    khat(p).to_rational()
}

pub fn khat_minus_three(p: &FareyPoint) -> Rational {
    khat(p).to_rational() - int(3)
}

/// `g_λ(a, b) = λ(a₁/a₀ + a₀/a₁) + (1−λ)(a₋₁/a₀ + a₂/a₁) − 3`, read along the
/// orbit through `(a₀, a₁) = (a, b)`: `a₋₁` is the x-coordinate of `T⁻¹(a, b)`
/// and `a₂` the y-coordinate of `T(a, b)`.
///
/// `g_{1/2} = k̂ − 3` and `g_1 = a/b + b/a − 3`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GLambda {
    pub lambda: Rational,
}

impl GLambda {
    pub fn new(lambda: Rational) -> Self {
        GLambda { lambda }
    }
}

pub fn g_lambda(lambda: Rational) -> GLambda {
    GLambda::new(lambda)
}

impl PointFunction for GLambda {
    fn eval(&self, p: &FareyPoint) -> Rational {
        let (x, y) = (p.x_num(), p.y_num());
        // a₋₁ + a₁ = kᵀ·a₀ and a₀ + a₂ = k·a₁ along any orbit.
        let prev = itinerary_transpose(p) as i128 * x as i128 - y as i128;
        let next = itinerary(p) as i128 * y as i128 - x as i128;
        let (x, y) = (x as i128, y as i128);
        let ratio = |n: i128, d: i128| Rational::new(BigInt::from(n), BigInt::from(d));
        let symmetric = ratio(y, x) + ratio(x, y);
        let outer = ratio(prev, x) + ratio(next, y);
        &self.lambda * symmetric + (Rational::one() - &self.lambda) * outer - int(3)
    }
}

/// One axis-aligned rectangle `(x0, x1] × (y0, y1]` carrying a constant value.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: Rational,
    pub x1: Rational,
    pub y0: Rational,
    pub y1: Rational,
    pub value: Rational,
}

impl Rect {
    pub fn contains(&self, a: &Rational, b: &Rational) -> bool {
        &self.x0 < a && a <= &self.x1 && &self.y0 < b && b <= &self.y1
    }
}

/// Piecewise-constant function: the sum of its rectangles' values at a point.
///
/// Rectangles are half-open, `(x0, x1] × (y0, y1]`, matching the `(0, 1]`
/// convention of the triangle; boundaries have measure zero, so the exact
/// integral is unaffected by the choice.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepFunction {
    pub rects: Vec<Rect>,
}

impl StepFunction {
    pub fn new(rects: Vec<Rect>) -> Result<Self> {
        for r in &rects {
            if r.x0 > r.x1 || r.y0 > r.y1 {
                return Err(Error::InvalidArgument(format!(
                    "empty rectangle ({}, {}] x ({}, {}]",
                    r.x0, r.x1, r.y0, r.y1
                )));
            }
        }
        Ok(StepFunction { rects })
    }

    pub fn constant(value: Rational) -> Self {
        StepFunction {
            rects: vec![Rect {
                x0: Rational::zero(),
                x1: Rational::one(),
                y0: Rational::zero(),
                y1: Rational::one(),
                value,
            }],
        }
    }

    /// Parses `x0,x1,y0,y1,value;…`.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut rects = Vec::new();
        for part in spec.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            let fields: Vec<&str> = part.split(',').collect();
            if fields.len() != 5 {
                return Err(Error::InvalidArgument(format!(
                    "step rectangle {part:?} needs 5 comma-separated fields"
                )));
            }
            let v = fields
                .iter()
                .map(|f| parse_rational(f))
                .collect::<Result<Vec<_>>>()?;
            let mut v = v.into_iter();
            let mut next = || v.next().expect("five fields");
            rects.push(Rect {
                x0: next(),
                x1: next(),
                y0: next(),
                y1: next(),
                value: next(),
            });
        }
        if rects.is_empty() {
            return Err(Error::InvalidArgument("empty step-function spec".into()));
        }
        Self::new(rects)
    }

    pub fn value_at(&self, a: &Rational, b: &Rational) -> Rational {
        self.rects
            .iter()
            .filter(|r| r.contains(a, b))
            .fold(Rational::zero(), |acc, r| acc + &r.value)
    }

    /// Pointwise sum.
    pub fn plus(&self, other: &StepFunction) -> StepFunction {
        let mut rects = self.rects.clone();
        rects.extend(other.rects.iter().cloned());
        StepFunction { rects }
    }

    /// `∫_Ω f dm` with `dm = 2 da db`, in closed form.
    pub fn integral(&self) -> Rational {
        self.rects
            .iter()
            .map(|r| int(2) * &r.value * triangle_clipped_area(r))
            .fold(Rational::zero(), |acc, v| acc + v)
    }
}

impl PointFunction for StepFunction {
    fn eval(&self, p: &FareyPoint) -> Rational {
        // Integer comparisons against the shared denominator would be faster,
        // but step functions only appear in desk-scale checks.
        self.value_at(&p.a(), &p.b())
    }
}

impl fmt::Display for StepFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .rects
            .iter()
            .map(|r| format!("{},{},{},{},{}", r.x0, r.x1, r.y0, r.y1, r.value))
            .collect();
        write!(f, "{}", parts.join(";"))
    }
}

fn clamp(v: &Rational, lo: &Rational, hi: &Rational) -> Rational {
    if v < lo {
        lo.clone()
    } else if v > hi {
        hi.clone()
    } else {
        v.clone()
    }
}

/// Area of `rect ∩ Ω`, where `Ω = {a, b ≤ 1, a + b > 1}`.
///
/// After clipping to the unit square, the area below the line `a + b = 1` is
/// the integral of the piecewise-linear `clamp(1 − a − y0, 0, y1 − y0)`; the
/// trapezoid rule is exact on each linear piece.
pub fn triangle_clipped_area(r: &Rect) -> Rational {
    let (zero, one) = (Rational::zero(), Rational::one());
    let x0 = clamp(&r.x0, &zero, &one);
    let x1 = clamp(&r.x1, &zero, &one);
    let y0 = clamp(&r.y0, &zero, &one);
    let y1 = clamp(&r.y1, &zero, &one);
    if x1 <= x0 || y1 <= y0 {
        return zero;
    }
    let height = &y1 - &y0;
    let below = |a: &Rational| clamp(&(&one - a - &y0), &zero, &height);
    let mut cuts = vec![x0.clone(), x1.clone(), &one - &y1, &one - &y0];
    cuts.retain(|c| c >= &x0 && c <= &x1);
    cuts.sort();
    cuts.dedup();
    let mut under = Rational::zero();
    for w in cuts.windows(2) {
        under += (&w[1] - &w[0]) * (below(&w[0]) + below(&w[1])) / int(2);
    }
    (&x1 - &x0) * &height - under
}

/// `k̂(a, b)` written as a rational-valued function, for generic call sites.
pub fn khat_fn() -> impl PointFunction {
    khat_rational
}
