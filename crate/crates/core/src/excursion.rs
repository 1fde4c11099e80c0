//! Excursions of the BCZ map: orbit segments whose endpoint x-coordinates lie
//! strictly below every interior x-coordinate.
//!
//! Every pair `(a, b) ∈ (0, 1]²` determines exactly one excursion with
//! `a₀ = a`, `a_s = b`; it starts at `(a, b₀)` with `b₀ = b + ⌊(1 − b)/a⌋·a`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bcz::{points, Dynamics};
use crate::error::{Error, Result};
use crate::exact::{int, rat, ExactSum, FareyPoint, HalfInteger, Rational};
use crate::farey::farey_stream;
use crate::functions::PointFunction;

/// A point of the moduli space `(0, 1]²`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModuliPoint {
    a: Rational,
    b: Rational,
}

impl ModuliPoint {
    pub fn new(a: Rational, b: Rational) -> Result<Self> {
        for (name, v) in [("a", &a), ("b", &b)] {
            if !v.is_positive() {
                return Err(Error::NonPositive(format!(
                    "moduli coordinate {name} = {v}"
                )));
            }
            if v > &Rational::one() {
                return Err(Error::InvalidArgument(format!(
                    "moduli coordinate {name} = {v} exceeds 1"
                )));
            }
        }
        Ok(ModuliPoint { a, b })
    }

    pub fn from_parts(a_num: i64, a_den: i64, b_num: i64, b_den: i64) -> Result<Self> {
        if a_den == 0 || b_den == 0 {
            return Err(Error::ZeroDenominator);
        }
        Self::new(rat(a_num, a_den), rat(b_num, b_den))
    }

    pub fn a(&self) -> &Rational {
        &self.a
    }

    pub fn b(&self) -> &Rational {
        &self.b
    }

    pub fn swapped(&self) -> Self {
        ModuliPoint {
            a: self.b.clone(),
            b: self.a.clone(),
        }
    }

    /// `(a·D, b·D, D)` over the least common denominator `D`.
    pub fn scaled(&self) -> Result<(i64, i64, i64)> {
        let p = FareyPoint::from_rationals(&self.a, &self.b)?;
        Ok((p.x_num(), p.y_num(), p.den()))
    }

    /// `1/(ab)`.
    pub fn length_bound(&self) -> Rational {
        (&self.a * &self.b).recip()
    }

    /// Membership in the golden-ratio region Δ.
    pub fn in_golden_region(&self) -> bool {
        crate::exact::in_golden_region(&self.a, &self.b).expect("moduli coordinates are positive")
    }
}

impl std::fmt::Display for ModuliPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.a, self.b)
    }
}

/// Excursions longer than this are streamed: only summary statistics of the
/// `ζ` series are kept.
pub const DEFAULT_MATERIALIZE_LIMIT: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildOptions {
    /// Also check interior depth, the length bound and the primitive-point count.
    pub verify: bool,
    pub materialize_limit: u64,
    pub dynamics: Dynamics,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            verify: false,
            materialize_limit: DEFAULT_MATERIALIZE_LIMIT,
            dynamics: Dynamics::EXACT,
        }
    }
}

impl BuildOptions {
    pub fn verified() -> Self {
        BuildOptions {
            verify: true,
            ..Self::default()
        }
    }
}

/// Summary of `ζ_i = Σ_{j<i} (k̂(T^j(a₀, b₀)) − 3)`, `i = 1..=s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZetaStats {
    pub zeta_1: HalfInteger,
    /// `ζ_{s−1}`, with `ζ₀ = 0`.
    pub zeta_s_minus_1: HalfInteger,
    pub zeta_s: HalfInteger,
    /// Extremes over `m ∈ [2, s−2]`; `None` when that range is empty.
    pub interior_min: Option<HalfInteger>,
    pub interior_max: Option<HalfInteger>,
    /// `Σ |ζ_i|`, the energy for `f = k̂ − 3`.
    pub energy: HalfInteger,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Excursion {
    moduli: ModuliPoint,
    start: FareyPoint,
    length: u64,
    points: Option<Vec<FareyPoint>>,
    zeta: Option<Vec<HalfInteger>>,
    stats: ZetaStats,
}

impl Excursion {
    pub fn moduli(&self) -> &ModuliPoint {
        &self.moduli
    }

    /// `(a₀, b₀)`.
    pub fn start(&self) -> FareyPoint {
        self.start
    }

    /// `s`.
    pub fn length(&self) -> u64 {
        self.length
    }

    pub fn is_materialized(&self) -> bool {
        self.points.is_some()
    }

    /// `(a_i, b_i)` for `i = 0..=s`, when materialized.
    pub fn points(&self) -> Option<&[FareyPoint]> {
        self.points.as_deref()
    }

    /// `ζ₁, …, ζ_s`, when materialized.
    pub fn zeta(&self) -> Option<&[HalfInteger]> {
        self.zeta.as_deref()
    }

    /// `ζ_i` for `i = 0..=s`.
    pub fn zeta_at(&self, i: usize) -> Option<HalfInteger> {
        if i == 0 {
            return Some(HalfInteger::ZERO);
        }
        self.zeta.as_ref().and_then(|z| z.get(i - 1).copied())
    }

    pub fn stats(&self) -> &ZetaStats {
        &self.stats
    }

    /// `E(k̂ − 3; a, b)`.
    pub fn energy(&self) -> HalfInteger {
        self.stats.energy
    }

    fn require_points(&self) -> Result<&[FareyPoint]> {
        self.points().ok_or_else(|| {
            Error::InvalidArgument(format!(
                "excursion of length {} is not materialized",
                self.length
            ))
        })
    }
}

/// Walks the excursion of `m`, visiting `(i, point)` for `i = 0..=s`.
///
/// Returns the start point and `s`. The walk stops with a violation if it
/// exceeds the length bound `s <= 1/(ab)` (which a correct map never does).
fn walk<F>(m: &ModuliPoint, dynamics: &Dynamics, mut visit: F) -> Result<(FareyPoint, u64)>
where
    F: FnMut(u64, &FareyPoint),
{
    let (x0, xs, den) = m.scaled()?;
    let b0 = xs + (den - xs) / x0 * x0;
    let start = FareyPoint::in_triangle(x0, b0, den)?;
    let cap = (den as u128 * den as u128) / (x0 as u128 * xs as u128);
    let mut p = start;
    let mut i = 0u64;
    loop {
        visit(i, &p);
        p = dynamics.step(&p)?;
        i += 1;
        if p.x_num() == xs {
            visit(i, &p);
            return Ok((start, i));
        }
        if i as u128 > cap {
            return Err(Error::violation(
                "excursion length bound",
                format!("{m}: no return within 1/(ab) steps"),
            ));
        }
    }
}

pub fn build_excursion(m: &ModuliPoint) -> Result<Excursion> {
    build_excursion_with(m, &BuildOptions::default())
}

pub fn build_excursion_with(m: &ModuliPoint, opts: &BuildOptions) -> Result<Excursion> {
    let (x0, xs, den) = m.scaled()?;
    let dynamics = &opts.dynamics;
    let materialize_cap = opts.materialize_limit.min(1 << 40);
    let mut pts: Option<Vec<FareyPoint>> = Some(Vec::new());
    let mut zs: Option<Vec<HalfInteger>> = Some(Vec::new());

    let mut twice: i128 = 0;
    let mut energy: i128 = 0;
    let mut zeta_1 = 0i128;
    // ζ values trail by two so ζ_{s−1} and ζ_s are known to be non-interior.
    let mut lag: [Option<(u64, i128)>; 2] = [None, None];
    let (mut lo, mut hi): (Option<i128>, Option<i128>) = (None, None);
    let (mut a1, mut a_prev_last, mut prev_x) = (0i64, 0i64, 0i64);
    let mut depth_failure: Option<String> = None;
    let floor = x0.max(xs);

    let (start, s) = walk(m, dynamics, |i, p| {
        if i >= 1 {
            // Point i closes ζ_i.
            energy += twice.abs();
            if i == 1 {
                zeta_1 = twice;
                a1 = p.x_num();
            }
            if let Some((j, z)) = lag[0] {
                if j >= 2 {
                    lo = Some(lo.map_or(z, |v| v.min(z)));
                    hi = Some(hi.map_or(z, |v| v.max(z)));
                }
            }
            lag = [lag[1], Some((i, twice))];
            a_prev_last = prev_x;
            if let Some(z) = zs.as_mut() {
                z.push(HalfInteger::from_twice(twice));
            }
        }
        if opts.verify && i >= 1 && p.x_num() != xs && p.x_num() <= floor && depth_failure.is_none()
        {
            depth_failure = Some(format!(
                "{m}: interior point {i} has x = {}/{den}",
                p.x_num()
            ));
        }
        twice += dynamics.khat_twice(p) - 6;
        prev_x = p.x_num();
        if let Some(v) = pts.as_mut() {
            if v.len() as u64 > materialize_cap {
                pts = None;
                zs = None;
            } else {
                v.push(*p);
            }
        }
    })?;

    if let Some(msg) = depth_failure {
        return Err(Error::violation("excursion depth", msg));
    }
    // a₁ = ⌊(1 − a_s)/a₀⌋·a₀ + a_s and a_{s−1} = a₀ + ⌊(1 − a₀)/a_s⌋·a_s.
    let a1_expect = (den - xs) / x0 * x0 + xs;
    let last_expect = x0 + (den - x0) / xs * xs;
    let a_last = if s == 1 { x0 } else { a_prev_last };
    if a1 != a1_expect || a_last != last_expect {
        return Err(Error::violation(
            "excursion endpoint formulas",
            format!("{m}: a_1 = {a1}/{den} (expected {a1_expect}), a_(s-1) = {a_last}/{den} (expected {last_expect})"),
        ));
    }
    if opts.verify {
        let bound = m.length_bound();
        if int(s as i64) > bound || (int(s as i64) == bound && !(m.a.is_one() && m.b.is_one())) {
            return Err(Error::violation(
                "excursion length bound",
                format!("{m}: s = {s}, 1/(ab) = {bound}"),
            ));
        }
        let count = count_primitive_points(m);
        if count + 1 != s {
            return Err(Error::violation(
                "primitive-point count",
                format!("{m}: s - 1 = {} but {count} coprime pairs", s - 1),
            ));
        }
    }

    // `twice` has also absorbed the end point's term; ζ_s is the last closed value.
    let zeta_s = lag[1].map(|(_, z)| z).expect("s >= 1");
    let zeta_s_minus_1 = if s >= 2 {
        lag[0].map(|(_, z)| z).unwrap_or(0)
    } else {
        0
    };
    let stats = ZetaStats {
        zeta_1: HalfInteger::from_twice(zeta_1),
        zeta_s_minus_1: HalfInteger::from_twice(zeta_s_minus_1),
        zeta_s: HalfInteger::from_twice(zeta_s),
        interior_min: lo.map(HalfInteger::from_twice),
        interior_max: hi.map(HalfInteger::from_twice),
        energy: HalfInteger::from_twice(energy),
    };
    Ok(Excursion {
        moduli: m.clone(),
        start,
        length: s,
        points: pts,
        zeta: zs,
        stats,
    })
}

/// Coprime `(u, v)`, `u, v >= 1`, with `u·a + v·b <= 1`, sorted by `v/u`.
///
/// Direct enumeration; an oracle independent of the orbit.
pub fn primitive_points(m: &ModuliPoint) -> Vec<(u64, u64)> {
    let (x0, xs, den) = m.scaled().expect("moduli point fits");
    let mut out = Vec::new();
    if x0 + xs > den {
        return out;
    }
    let u_max = (den - xs) / x0;
    for u in 1..=u_max {
        let v_max = (den - u * x0) / xs;
        for v in 1..=v_max {
            if u.gcd(&v) == 1 {
                out.push((u as u64, v as u64));
            }
        }
    }
    out.sort_by(|p, q| (p.1 * q.0).cmp(&(q.1 * p.0)));
    out
}

fn count_primitive_points(m: &ModuliPoint) -> u64 {
    let (x0, xs, den) = m.scaled().expect("moduli point fits");
    if x0 + xs > den {
        return 0;
    }
    let mut count = 0u64;
    for u in 1..=(den - xs) / x0 {
        for v in 1..=(den - u * x0) / xs {
            if u.gcd(&v) == 1 {
                count += 1;
            }
        }
    }
    count
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LengthEstimate {
    pub s: u64,
    /// `s·ab·π²/3`, which tends to 1 as `a, b → 0`.
    pub ratio: f64,
    pub bound: Rational,
}

pub fn excursion_length_estimate(m: &ModuliPoint) -> Result<LengthEstimate> {
    let (_, s) = walk(m, &Dynamics::EXACT, |_, _| {})?;
    let ab = crate::exact::to_f64(&(&m.a * &m.b));
    Ok(LengthEstimate {
        s,
        ratio: s as f64 * ab * std::f64::consts::PI.powi(2) / 3.0,
        bound: m.length_bound(),
    })
}

/// The excursion of `(b, a)`, checked against `(b_{s−1−m}, a_{s−1−m})` and
/// `ζ^rev_i = ζ_s − ζ_{s−i}` when `e` is materialized.
pub fn reverse_excursion(e: &Excursion) -> Result<Excursion> {
    let rev = build_excursion(&e.moduli.swapped())?;
    if rev.length != e.length {
        return Err(Error::violation(
            "excursion reversal",
            format!("{}: lengths {} and {}", e.moduli, e.length, rev.length),
        ));
    }
    if let (Some(p), Some(q)) = (e.points(), rev.points()) {
        let s = e.length as usize;
        for m in 0..s {
            if q[m] != p[s - 1 - m].swapped() {
                return Err(Error::violation(
                    "excursion reversal",
                    format!("{}: point {m}", e.moduli),
                ));
            }
        }
        let zs = e.stats.zeta_s;
        for i in 1..=s {
            if rev.zeta_at(i) != Some(zs - e.zeta_at(s - i).expect("materialized")) {
                return Err(Error::violation(
                    "excursion reversal",
                    format!("{}: zeta {i}", e.moduli),
                ));
            }
        }
    }
    Ok(rev)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResetReport {
    pub lower: Rational,
    pub zeta_s: Rational,
    pub upper: Rational,
}

/// `ζ_s ∈ (r + 1/r − 4, r + 1/r − 2)` with `r = a_s/a₀`, and `|ζ_s| < r + 1/r`.
pub fn reset_sum_check(e: &Excursion) -> Result<ResetReport> {
    let r = e.moduli.b() / e.moduli.a();
    let center = &r + r.recip();
    let lower = &center - int(4);
    let upper = &center - int(2);
    let zeta_s = e.stats.zeta_s.to_rational();
    if !(lower < zeta_s && zeta_s < upper) || zeta_s.abs() >= center {
        return Err(Error::violation(
            "reset control",
            format!("{}: zeta_s = {zeta_s} outside ({lower}, {upper})", e.moduli),
        ));
    }
    Ok(ResetReport {
        lower,
        zeta_s,
        upper,
    })
}

/// `θ_{r_i}`, where `p_{r_i}/q_{r_i} = 1/i` in `F(n)`, checked against
/// `(i + 1/i − 4, i + 1/i − 2)`.
pub fn theta_reset_at_r_i(n: u64, i: u64) -> Result<Rational> {
    if i == 0 || i > n {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= i <= n, got i = {i}, n = {n}"
        )));
    }
    let mut twice: i128 = 0;
    let start = crate::bcz::periodic_start(n)?;
    for (f, p) in farey_stream(n)?.skip(1).zip(points(start)) {
        twice += Dynamics::EXACT.khat_twice(&p) - 6;
        if f.p == 1 && f.q == i {
            let theta = HalfInteger::from_twice(twice).to_rational();
            let center = int(i as i64) + rat(1, i as i64);
            if !(&center - int(4) < theta && theta < &center - int(2)) {
                return Err(Error::violation(
                    "theta reset",
                    format!("n = {n}, i = {i}: theta = {theta}"),
                ));
            }
            return Ok(theta);
        }
    }
    unreachable!("1/i is a term of F(n) for i <= n")
}

/// `ζ_{s−1} < ζ_m < ζ₁` for every `m ∈ [2, s−2]`; needs `s >= 4`.
pub fn monotonicity_check(e: &Excursion) -> Result<bool> {
    if e.length < 4 {
        return Err(Error::ExcursionTooShort(e.length));
    }
    let st = &e.stats;
    let (lo, hi) = (
        st.interior_min.expect("s >= 4"),
        st.interior_max.expect("s >= 4"),
    );
    Ok(st.zeta_s_minus_1 < lo && hi < st.zeta_1)
}

/// `ζ₁ <= 1/a₀ − 2` and `ζ_{s−1} > −1/a₀ − 2/a_s + 2`, for `s >= 4`.
pub fn zeta_bounds_check(e: &Excursion) -> Result<()> {
    if e.length < 4 {
        return Err(Error::ExcursionTooShort(e.length));
    }
    let (a0, a_s) = (e.moduli.a(), e.moduli.b());
    let z1 = e.stats.zeta_1.to_rational();
    let zl = e.stats.zeta_s_minus_1.to_rational();
    let top = a0.recip() - int(2);
    let bottom = -a0.recip() - int(2) / a_s + int(2);
    if z1 > top || zl <= bottom {
        return Err(Error::violation(
            "zeta bounds",
            format!(
                "{}: zeta_1 = {z1} (max {top}), zeta_(s-1) = {zl} (min {bottom})",
                e.moduli
            ),
        ));
    }
    Ok(())
}

/// `E(f; a, b) = Σ_{i=1}^{s} |ζ_i|` with `ζ_i = Σ_{j<i} f(T^j(a₀, b₀))`.
pub fn energy<F: PointFunction + ?Sized>(f: &F, m: &ModuliPoint) -> Result<Rational> {
    let mut partial = Rational::zero();
    let mut sum = ExactSum::new();
    // f is also evaluated at the end point; that term never reaches a ζ_i.
    walk(m, &Dynamics::EXACT, |i, p| {
        if i >= 1 {
            sum.add(&partial.abs());
        }
        partial += f.eval(p);
    })?;
    Ok(sum.total())
}

/// `ζ_s(f) = Σ_{j<s} f(T^j(a₀, b₀))`, the total of `f` over the excursion.
pub fn excursion_sum<F: PointFunction + ?Sized>(f: &F, m: &ModuliPoint) -> Result<Rational> {
    let mut sum = ExactSum::new();
    // Each point is added once its successor shows it is not the end point.
    let mut pending: Option<FareyPoint> = None;
    walk(m, &Dynamics::EXACT, |_, p| {
        if let Some(q) = pending.replace(*p) {
            sum.add(&f.eval(&q));
        }
    })?;
    Ok(sum.total())
}

/// `E(k̂ − 3; a, b)` in half-integers.
pub fn energy_khat(m: &ModuliPoint) -> Result<HalfInteger> {
    let mut twice = 0i128;
    let mut energy = 0i128;
    walk(m, &Dynamics::EXACT, |i, p| {
        if i >= 1 {
            energy += twice.abs();
        }
        twice += Dynamics::EXACT.khat_twice(p) - 6;
    })?;
    Ok(HalfInteger::from_twice(energy))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnergyBoundReport {
    pub energy: HalfInteger,
    /// `2d⁵`, when `max(1/a, 1/b) <= d`.
    pub polynomial_bound: Option<Rational>,
    /// Whether `max(1/a, 1/b) > √5 + 2` and the point lies in Δ.
    pub deep_golden: bool,
}

/// `x > √5 + 2`, exactly.
fn exceeds_sqrt5_plus_2(x: &Rational) -> bool {
    let t = x - int(2);
    t.is_positive() && &t * &t > int(5)
}

/// `E(k̂ − 3; a, b) <= 2d⁵` when `max(1/a, 1/b) <= d`; and `2a + b < 1`,
/// `a + 2b < 1` when `max(1/a, 1/b) > √5 + 2` inside Δ.
pub fn energy_bound_checks(m: &ModuliPoint, d: &Rational) -> Result<EnergyBoundReport> {
    let e = energy_khat(m)?;
    let depth = std::cmp::max(m.a.recip(), m.b.recip());
    let polynomial_bound = if &depth <= d {
        let bound = int(2) * d.pow(5);
        if e.to_rational() > bound {
            return Err(Error::violation(
                "energy bound",
                format!("{m}: E = {e} > 2d^5 = {bound}"),
            ));
        }
        Some(bound)
    } else {
        None
    };
    let deep_golden = exceeds_sqrt5_plus_2(&depth) && m.in_golden_region();
    if deep_golden {
        let one = Rational::one();
        if int(2) * &m.a + &m.b >= one || &m.a + int(2) * &m.b >= one {
            return Err(Error::violation(
                "golden region depth",
                format!("{m}: 2a + b or a + 2b reaches 1"),
            ));
        }
    }
    Ok(EnergyBoundReport {
        energy: e,
        polynomial_bound,
        deep_golden,
    })
}

/// Whether `i1 < i2` delimit a sub-excursion: every `a_i` strictly between
/// exceeds both `a_{i1}` and `a_{i2}`.
pub fn is_sub_excursion(e: &Excursion, i1: usize, i2: usize) -> Result<bool> {
    let pts = e.require_points()?;
    if i1 >= i2 || i2 > e.length as usize {
        return Ok(false);
    }
    let floor = pts[i1].x_num().max(pts[i2].x_num());
    Ok(pts[i1 + 1..i2].iter().all(|p| p.x_num() > floor))
}

/// `Σ_{m=i1+1}^{i2} |ζ_m| <= (i2 − i1)|ζ_{i1}| + E(c, d)`, with the
/// sub-excursion's energy `E(c, d)` rebuilt from its endpoints alone.
pub fn sub_excursion_inequality_check(e: &Excursion, i1: usize, i2: usize) -> Result<bool> {
    if !is_sub_excursion(e, i1, i2)? {
        return Err(Error::NotSubExcursion { i1, i2 });
    }
    let pts = e.require_points()?;
    let sub = ModuliPoint::new(pts[i1].a(), pts[i2].a())?;
    let inner = build_excursion(&sub)?;
    if inner.length as usize != i2 - i1 {
        return Err(Error::violation(
            "sub-excursion uniqueness",
            format!(
                "{}: ({i1}, {i2}) spans {} steps, excursion {sub} has {}",
                e.moduli,
                i2 - i1,
                inner.length
            ),
        ));
    }
    let zeta = |i: usize| e.zeta_at(i).expect("materialized");
    let lhs: HalfInteger = (i1 + 1..=i2).map(|m| zeta(m).abs()).sum();
    let scale = HalfInteger::from_twice(zeta(i1).abs().twice_value() * (i2 - i1) as i128);
    Ok(lhs <= scale + inner.energy())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReversedTailReport {
    pub t1: u64,
    pub lhs: HalfInteger,
    pub rhs: HalfInteger,
}

/// For `a + b <= 1`, with `a_{t₁} = a + b`:
/// `Σ_{m=t₁+1}^{s−1} |Σ_{j=m}^{s−1} (k̂ − 3)| <= E(b, a + b)`, and
/// `E(a, a + b) = Σ_{m=1}^{t₁} |ζ_m|`.
pub fn reversed_tail_check(m: &ModuliPoint) -> Result<ReversedTailReport> {
    let sum = m.a() + m.b();
    if sum > Rational::one() {
        return Err(Error::InvalidArgument(format!("{m}: needs a + b <= 1")));
    }
    let e = build_excursion(m)?;
    let pts = e.require_points()?;
    let target = FareyPoint::from_rationals(&sum, &sum)?;
    let t1 = pts
        .iter()
        .position(|p| p.a() == target.a())
        .ok_or_else(|| {
            Error::violation(
                "reversed tail",
                format!("{m}: a + b is not an orbit coordinate"),
            )
        })?;
    let s = e.length as usize;
    let zeta = |i: usize| e.zeta_at(i).expect("materialized");
    let zs = zeta(s);
    let lhs: HalfInteger = (t1 + 1..s).map(|i| (zs - zeta(i)).abs()).sum();
    let rhs = energy_khat(&ModuliPoint::new(m.b().clone(), sum.clone())?)?;
    let head: HalfInteger = (1..=t1).map(|i| zeta(i).abs()).sum();
    if head != energy_khat(&ModuliPoint::new(m.a().clone(), sum)?)? {
        return Err(Error::violation(
            "reversed tail",
            format!("{m}: prefix energy mismatch"),
        ));
    }
    if lhs > rhs {
        return Err(Error::violation(
            "reversed tail",
            format!("{m}: {lhs} > E(b, a+b) = {rhs}"),
        ));
    }
    Ok(ReversedTailReport {
        t1: t1 as u64,
        lhs,
        rhs,
    })
}

/// Fractions in `(0, 1]` with denominator at most `max_den`.
pub fn moduli_coordinates(max_den: u64) -> Result<Vec<Rational>> {
    Ok(farey_stream(max_den)?
        .skip(1)
        .map(|f| Rational::new(BigInt::from(f.p), BigInt::from(f.q)))
        .collect())
}

/// Random moduli point with both denominators drawn from `1..=max_den`.
pub fn sample_moduli_point<R: Rng + ?Sized>(rng: &mut R, max_den: i64) -> ModuliPoint {
    let mut coord = || {
        let q = rng.gen_range(1..=max_den);
        rat(rng.gen_range(1..=q), q)
    };
    ModuliPoint {
        a: coord(),
        b: coord(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bcz::{seeded_rng, theta_series};
    use crate::farey::farey_length;
    use crate::functions::{khat_minus_three, return_time};
    use proptest::prelude::*;
    use rand::Rng;

    fn mp(a: (i64, i64), b: (i64, i64)) -> ModuliPoint {
        ModuliPoint::from_parts(a.0, a.1, b.0, b.1).unwrap()
    }

    fn h(twice: i128) -> HalfInteger {
        HalfInteger::from_twice(twice)
    }

    #[test]
    fn moduli_validation() {
        assert!(ModuliPoint::new(int(0), int(1)).is_err());
        assert!(ModuliPoint::new(rat(3, 2), int(1)).is_err());
        assert!(ModuliPoint::from_parts(1, 0, 1, 1).is_err());
        assert_eq!(mp((1, 2), (1, 3)).scaled().unwrap(), (3, 2, 6));
    }

    #[test]
    fn build_examples() {
        let e = build_excursion_with(&mp((1, 1), (1, 1)), &BuildOptions::verified()).unwrap();
        assert_eq!(e.length(), 1);
        assert_eq!(e.zeta().unwrap(), &[h(-2)]);
        let e = build_excursion_with(&mp((1, 2), (1, 2)), &BuildOptions::verified()).unwrap();
        assert_eq!(e.length(), 2);
        let pts: Vec<_> = e.points().unwrap().iter().map(|p| (p.a(), p.b())).collect();
        assert_eq!(
            pts,
            vec![
                (rat(1, 2), int(1)),
                (int(1), rat(1, 2)),
                (rat(1, 2), int(1))
            ]
        );
        assert_eq!(e.zeta().unwrap(), &[h(-1), h(-2)]);
        assert_eq!(e.energy(), h(3));
        let e = build_excursion(&mp((1, 3), (1, 3))).unwrap();
        assert_eq!(e.zeta().unwrap(), &[h(1), h(-1), h(-3), h(-2)]);
        assert_eq!(e.energy(), h(7));
        // s = 1 away from the fixed point.
        let e = build_excursion_with(&mp((2, 3), (2, 3)), &BuildOptions::verified()).unwrap();
        assert_eq!(e.length(), 1);
    }

    #[test]
    fn diagonal_excursion_is_periodic_orbit() {
        for n in 1..=60 {
            let e = build_excursion_with(&mp((1, n), (1, n)), &BuildOptions::verified()).unwrap();
            assert_eq!(e.length(), farey_length(n as u64).unwrap().a_n);
            assert_eq!(e.start(), FareyPoint::new(1, n, n).unwrap());
            let th = theta_series(n as u64).unwrap();
            assert_eq!(e.zeta().unwrap(), th.terms.as_slice());
            assert_eq!(e.energy(), th.abs_sum());
        }
    }

    #[test]
    fn streaming_matches_materialized() {
        let m = mp((1, 40), (3, 70));
        let full = build_excursion(&m).unwrap();
        let opts = BuildOptions {
            materialize_limit: 10,
            ..BuildOptions::default()
        };
        let streamed = build_excursion_with(&m, &opts).unwrap();
        assert!(!streamed.is_materialized() && full.is_materialized());
        assert_eq!(streamed.stats(), full.stats());
        let z = full.zeta().unwrap();
        let s = full.length() as usize;
        let interior = &z[1..s - 2];
        assert_eq!(full.stats().interior_min, interior.iter().copied().min());
        assert_eq!(full.stats().interior_max, interior.iter().copied().max());
        assert_eq!(full.stats().zeta_s_minus_1, z[s - 2]);
    }

    #[test]
    fn primitive_point_examples() {
        assert_eq!(primitive_points(&mp((1, 2), (1, 2))), vec![(1, 1)]);
        assert_eq!(
            primitive_points(&mp((1, 3), (1, 3))),
            vec![(2, 1), (1, 1), (1, 2)]
        );
        assert!(primitive_points(&mp((1, 1), (1, 1))).is_empty());
    }

    #[test]
    fn primitive_points_reproduce_interior() {
        let coords = moduli_coordinates(20).unwrap();
        for a in &coords {
            for b in &coords {
                let m = ModuliPoint::new(a.clone(), b.clone()).unwrap();
                let e = build_excursion(&m).unwrap();
                let pp = primitive_points(&m);
                assert_eq!(pp.len() as u64 + 1, e.length(), "{m}");
                for (i, (u, v)) in pp.iter().enumerate() {
                    let expect = int(*u as i64) * a + int(*v as i64) * b;
                    assert_eq!(e.points().unwrap()[i + 1].a(), expect, "{m} i={}", i + 1);
                }
            }
        }
    }

    #[test]
    fn length_estimates() {
        let est = excursion_length_estimate(&mp((1, 1), (1, 1))).unwrap();
        assert_eq!((est.s, est.bound), (1, int(1)));
        let est = excursion_length_estimate(&mp((1, 2), (1, 2))).unwrap();
        assert_eq!((est.s, est.bound), (2, int(4)));
        let est = excursion_length_estimate(&mp((1, 400), (1, 400))).unwrap();
        assert!((est.ratio - 1.0).abs() < 0.01, "{}", est.ratio);
    }

    #[test]
    fn reversal() {
        let e = build_excursion(&mp((1, 2), (1, 2))).unwrap();
        assert_eq!(reverse_excursion(&e).unwrap(), e);
        let mut rng = seeded_rng(4);
        for _ in 0..1000 {
            let m = sample_moduli_point(&mut rng, 100);
            let e = build_excursion(&m).unwrap();
            let r = reverse_excursion(&e).unwrap();
            assert_eq!(r.moduli(), &m.swapped());
            assert_eq!(reverse_excursion(&r).unwrap(), e);
        }
    }

    #[test]
    fn reset_examples() {
        let rep = reset_sum_check(&build_excursion(&mp((1, 1), (1, 1))).unwrap()).unwrap();
        assert_eq!(
            (rep.lower, rep.zeta_s, rep.upper),
            (int(-2), int(-1), int(0))
        );
        let rep = reset_sum_check(&build_excursion(&mp((1, 2), (1, 2))).unwrap()).unwrap();
        assert_eq!(rep.zeta_s, int(-1));
        for n in [3, 7, 50] {
            let rep = reset_sum_check(&build_excursion(&mp((1, n), (1, n))).unwrap()).unwrap();
            assert_eq!(rep.zeta_s, int(-1));
        }
    }

    #[test]
    fn theta_reset_examples() {
        assert_eq!(theta_reset_at_r_i(3, 1).unwrap(), int(-1));
        assert_eq!(theta_reset_at_r_i(3, 3).unwrap(), rat(1, 2));
        // Oracle: position of 1/2 in F(5) is 5, θ₅ from the series.
        let th = theta_series(5).unwrap();
        assert_eq!(theta_reset_at_r_i(5, 2).unwrap(), th.terms[4].to_rational());
        assert_eq!(theta_reset_at_r_i(5, 2).unwrap(), rat(-1, 2));
        assert!(theta_reset_at_r_i(5, 6).is_err());
        assert!(theta_reset_at_r_i(5, 0).is_err());
        for n in 1..=80 {
            for i in 1..=n {
                theta_reset_at_r_i(n, i).unwrap();
            }
        }
    }

    #[test]
    fn monotonicity_examples() {
        let e = build_excursion(&mp((1, 3), (1, 3))).unwrap();
        assert!(monotonicity_check(&e).unwrap());
        zeta_bounds_check(&e).unwrap();
        let short = build_excursion(&mp((1, 2), (1, 2))).unwrap();
        assert!(matches!(
            monotonicity_check(&short),
            Err(Error::ExcursionTooShort(2))
        ));
    }

    #[test]
    fn exhaustive_small_denominators() {
        let coords = moduli_coordinates(40).unwrap();
        for a in &coords {
            for b in &coords {
                let m = ModuliPoint::new(a.clone(), b.clone()).unwrap();
                let e = build_excursion_with(&m, &BuildOptions::verified()).unwrap();
                reset_sum_check(&e).unwrap();
                if e.length() >= 4 {
                    assert!(monotonicity_check(&e).unwrap(), "{m}");
                    zeta_bounds_check(&e).unwrap();
                }
            }
        }
    }

    #[test]
    fn energy_examples() {
        assert_eq!(
            energy(&khat_minus_three, &mp((1, 3), (1, 3))).unwrap(),
            rat(7, 2)
        );
        assert_eq!(
            energy(&khat_minus_three, &mp((1, 1), (1, 1))).unwrap(),
            int(1)
        );
        assert_eq!(
            energy(&khat_minus_three, &mp((1, 2), (1, 2))).unwrap(),
            rat(3, 2)
        );
        assert_eq!(
            energy(&|_: &FareyPoint| int(0), &mp((1, 7), (2, 9))).unwrap(),
            int(0)
        );
        let m = mp((2, 11), (3, 13));
        assert_eq!(
            energy(&khat_minus_three, &m).unwrap(),
            energy_khat(&m).unwrap().to_rational()
        );
        assert!(energy(&return_time, &m).unwrap().is_positive());
    }

    #[test]
    fn energy_bound_examples() {
        let rep = energy_bound_checks(&mp((1, 2), (1, 2)), &int(2)).unwrap();
        assert_eq!(rep.energy, h(3));
        assert_eq!(rep.polynomial_bound, Some(int(64)));
        let rep = energy_bound_checks(&mp((1, 10), (1, 10)), &int(10)).unwrap();
        assert!(rep.deep_golden);
        let rep = energy_bound_checks(&mp((1, 5), (1, 5)), &int(5)).unwrap();
        assert_eq!(rep.energy, h(27));
        assert_eq!(rep.polynomial_bound, Some(int(6250)));
        // (√5 + 2 ≈ 4.236): 4 is below, 17/4 above.
        assert!(!exceeds_sqrt5_plus_2(&int(4)));
        assert!(exceeds_sqrt5_plus_2(&rat(17, 4)));
    }

    #[test]
    fn sub_excursion_examples() {
        let e = build_excursion(&mp((1, 3), (1, 3))).unwrap();
        let s = e.length() as usize;
        assert!(sub_excursion_inequality_check(&e, 0, s).unwrap());
        assert!(sub_excursion_inequality_check(&e, 0, 2).unwrap());
        assert!(sub_excursion_inequality_check(&e, 2, 4).unwrap());
        // Positions 1 and 3 (both x = 1) enclose the lower point 2/3: not a
        // sub-excursion.
        assert!(matches!(
            sub_excursion_inequality_check(&e, 1, 3),
            Err(Error::NotSubExcursion { i1: 1, i2: 3 })
        ));
    }

    #[test]
    fn sub_excursions_random() {
        let mut rng = seeded_rng(12);
        let mut checked = 0;
        while checked < 1000 {
            let m = sample_moduli_point(&mut rng, 30);
            let e = build_excursion(&m).unwrap();
            let s = e.length() as usize;
            let i1 = rng.gen_range(0..s);
            // The nearest j > i1 with a_j <= a_{i1}, or the last point before
            // it, always closes a sub-excursion.
            let pts = e.points().unwrap();
            let mut i2 = i1 + 1;
            for j in i1 + 1..=s {
                i2 = j;
                if pts[j].x_num() <= pts[i1].x_num() {
                    break;
                }
            }
            if is_sub_excursion(&e, i1, i2).unwrap() {
                assert!(
                    sub_excursion_inequality_check(&e, i1, i2).unwrap(),
                    "{m} ({i1}, {i2})"
                );
                checked += 1;
            }
        }
    }

    #[test]
    fn reversed_tail_examples() {
        let coords = moduli_coordinates(25).unwrap();
        for a in &coords {
            for b in &coords {
                if a + b <= Rational::one() {
                    reversed_tail_check(&ModuliPoint::new(a.clone(), b.clone()).unwrap()).unwrap();
                }
            }
        }
        assert!(reversed_tail_check(&mp((2, 3), (2, 3))).is_err());
    }

    #[test]
    fn mutated_dynamics_is_caught() {
        let opts = BuildOptions {
            dynamics: Dynamics {
                itinerary_offset: 1,
            },
            ..BuildOptions::default()
        };
        let err = build_excursion_with(&mp((1, 5), (2, 7)), &opts).unwrap_err();
        assert!(err.is_violation(), "{err}");
    }

    proptest! {
        #[test]
        fn depth_and_bounds(ap in 1i64..200, aq in 1i64..200, bp in 1i64..200, bq in 1i64..200) {
            prop_assume!(ap <= aq && bp <= bq);
            let m = mp((ap, aq), (bp, bq));
            let e = build_excursion_with(&m, &BuildOptions::verified()).unwrap();
            prop_assert!(int(e.length() as i64) <= m.length_bound());
            prop_assert!(e.energy() >= HalfInteger::ZERO);
            reset_sum_check(&e).unwrap();
        }
    }
}
