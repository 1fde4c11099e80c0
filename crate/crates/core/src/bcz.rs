//! The BCZ map on the Farey triangle and the partial-sum series along the
//! periodic orbit of `(1/n, 1)`.
//!
//! Points carry integer numerators over a shared denominator and the map acts
//! on numerators only: `k = ⌊(den + x)/y⌋`, `T(x, y) = (y, k·y − x)`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{int, rat, ExactSum, FareyPoint, HalfInteger, Rational};
use crate::farey::{check_order, farey_length, farey_stream};
use crate::functions::{return_time, PointFunction};

/// `k(a, b) = ⌊(1 + a)/b⌋`.
#[inline]
pub fn itinerary(p: &FareyPoint) -> i64 {
    ((p.den() as i128 + p.x_num() as i128) / p.y_num() as i128) as i64
}

/// `kᵀ(a, b) = k(b, a)`.
#[inline]
pub fn itinerary_transpose(p: &FareyPoint) -> i64 {
    ((p.den() as i128 + p.y_num() as i128) / p.x_num() as i128) as i64
}

#[inline]
pub fn khat(p: &FareyPoint) -> HalfInteger {
    HalfInteger::from_twice(itinerary(p) as i128 + itinerary_transpose(p) as i128)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub point: FareyPoint,
    pub k: i64,
    pub k_t: i64,
    pub k_hat: HalfInteger,
    pub r: Rational,
}

impl StepRecord {
    pub fn at(point: FareyPoint) -> Self {
        let k = itinerary(&point);
        let k_t = itinerary_transpose(&point);
        StepRecord {
            point,
            k,
            k_t,
            k_hat: HalfInteger::from_twice(k as i128 + k_t as i128),
            r: return_time(&point),
        }
    }

    pub fn r_minus_khat(&self) -> Rational {
        &self.r - self.k_hat.to_rational()
    }
}

/// One step on a point already known to lie in the triangle.
#[inline]
pub(crate) fn step_unchecked(p: &FareyPoint) -> FareyPoint {
    let k = itinerary(p);
    // 0 < k·y − x <= den inside the triangle, so no overflow.
    FareyPoint::raw(p.y_num(), k * p.y_num() - p.x_num(), p.den())
}

pub(crate) fn require_triangle(p: &FareyPoint) -> Result<()> {
    if p.is_in_triangle() {
        Ok(())
    } else {
        Err(Error::NotInTriangle(*p))
    }
}

pub fn bcz_step(p: &FareyPoint) -> Result<(FareyPoint, StepRecord)> {
    require_triangle(p)?;
    Ok((step_unchecked(p), StepRecord::at(*p)))
}

/// `T⁻¹ = S ∘ T ∘ S` with `S(a, b) = (b, a)`.
pub fn bcz_step_inverse(p: &FareyPoint) -> Result<FareyPoint> {
    require_triangle(p)?;
    Ok(step_inverse_unchecked(p))
}

pub(crate) fn step_inverse_unchecked(p: &FareyPoint) -> FareyPoint {
    step_unchecked(&p.swapped()).swapped()
}

/// The map with its itinerary shifted by a constant.
///
/// Offset 0 is `T` itself. Any other offset is a deliberately broken map, used
/// to confirm that the verification harness notices; its steps are checked and
/// leaving the triangle is reported as a violation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dynamics {
    pub itinerary_offset: i64,
}

impl Dynamics {
    pub const EXACT: Dynamics = Dynamics {
        itinerary_offset: 0,
    };

    #[inline]
    pub fn itinerary(&self, p: &FareyPoint) -> i64 {
        itinerary(p) + self.itinerary_offset
    }

    #[inline]
    pub fn itinerary_transpose(&self, p: &FareyPoint) -> i64 {
        itinerary_transpose(p) + self.itinerary_offset
    }

    /// `2k̂`.
    #[inline]
    pub fn khat_twice(&self, p: &FareyPoint) -> i128 {
        self.itinerary(p) as i128 + self.itinerary_transpose(p) as i128
    }

    #[inline]
    pub fn step(&self, p: &FareyPoint) -> Result<FareyPoint> {
        if self.itinerary_offset == 0 {
            return Ok(step_unchecked(p));
        }
        let next = self.itinerary(p) as i128 * p.y_num() as i128 - p.x_num() as i128;
        let q = FareyPoint::raw(
            p.y_num(),
            next.clamp(i64::MIN as i128, i64::MAX as i128) as i64,
            p.den(),
        );
        if !q.is_in_triangle() {
            return Err(Error::violation(
                "BCZ step",
                format!("T{p} left the Farey triangle"),
            ));
        }
        Ok(q)
    }
}

/// `(1/n, 1)`, the start of the orbit whose x-numerators are the Farey
/// denominators of order `n`.
pub fn periodic_start(n: u64) -> Result<FareyPoint> {
    check_order(n)?;
    FareyPoint::in_triangle(1, n as i64, n as i64)
}

/// Orbit iterator yielding `T⁰(start), …, T^{steps−1}(start)`.
#[derive(Clone, Debug)]
pub struct OrbitStream {
    cur: FareyPoint,
    remaining: u64,
}

impl Iterator for OrbitStream {
    type Item = StepRecord;

    fn next(&mut self) -> Option<StepRecord> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let rec = StepRecord::at(self.cur);
        self.cur = step_unchecked(&self.cur);
        Some(rec)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let r = usize::try_from(self.remaining).unwrap_or(usize::MAX);
        (r, Some(r))
    }
}

pub fn orbit_stream(start: &FareyPoint, steps: u64) -> Result<OrbitStream> {
    require_triangle(start)?;
    Ok(OrbitStream {
        cur: *start,
        remaining: steps,
    })
}

/// Bare point iterator, without the per-step records.
#[derive(Clone, Debug)]
pub(crate) struct Points {
    cur: FareyPoint,
}

impl Iterator for Points {
    type Item = FareyPoint;

    #[inline]
    fn next(&mut self) -> Option<FareyPoint> {
        let p = self.cur;
        self.cur = step_unchecked(&p);
        Some(p)
    }
}

pub(crate) fn points(start: FareyPoint) -> Points {
    Points { cur: start }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesKind {
    Theta,
    Iota,
    Custom,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CocycleSeries<T> {
    pub n: u64,
    pub kind: SeriesKind,
    pub terms: Vec<T>,
}

impl<T> CocycleSeries<T> {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn last(&self) -> Option<&T> {
        self.terms.last()
    }
}

impl CocycleSeries<HalfInteger> {
    pub fn abs_sum(&self) -> HalfInteger {
        self.terms.iter().map(HalfInteger::abs).sum()
    }
}

impl CocycleSeries<Rational> {
    pub fn abs_sum(&self) -> Rational {
        self.terms.iter().map(|t| t.abs()).sum::<ExactSum>().total()
    }
}

/// `θ_i = Σ_{j<=i} (k̂(T^{j−1}(1/n, 1)) − 3)` for `i = 1..=A_n`.
pub fn theta_series(n: u64) -> Result<CocycleSeries<HalfInteger>> {
    let a_n = farey_length(n)?.a_n;
    let three = HalfInteger::from_integer(3);
    let mut acc = HalfInteger::ZERO;
    let terms = points(periodic_start(n)?)
        .take(a_n as usize)
        .map(|p| {
            acc += khat(&p) - three;
            acc
        })
        .collect();
    Ok(CocycleSeries {
        n,
        kind: SeriesKind::Theta,
        terms,
    })
}

/// Streaming summary of `θ` for large orders: no terms are stored.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThetaSummary {
    pub n: u64,
    pub a_n: u64,
    pub abs_sum: HalfInteger,
    pub terminal: HalfInteger,
}

pub fn theta_abs_sum(n: u64) -> Result<ThetaSummary> {
    theta_abs_sum_with(n, &Dynamics::EXACT)
}

pub fn theta_abs_sum_with(n: u64, dynamics: &Dynamics) -> Result<ThetaSummary> {
    let a_n = farey_length(n)?.a_n;
    let mut twice: i128 = 0;
    let mut abs: i128 = 0;
    let mut p = periodic_start(n)?;
    for _ in 0..a_n {
        twice += dynamics.khat_twice(&p) - 6;
        abs += twice.abs();
        p = dynamics.step(&p)?;
    }
    Ok(ThetaSummary {
        n,
        a_n,
        abs_sum: HalfInteger::from_twice(abs),
        terminal: HalfInteger::from_twice(twice),
    })
}

/// Checks that the x-numerators along the orbit of `(1/n, 1)` are the Farey
/// denominators of order `n` and that the orbit closes after `A_n` steps.
pub fn orbit_farey_check(n: u64, dynamics: &Dynamics) -> Result<()> {
    let a_n = farey_length(n)?.a_n;
    let start = periodic_start(n)?;
    let mut p = start;
    for f in farey_stream(n)?.take(a_n as usize) {
        if p.x_num() as u64 != f.q {
            return Err(Error::violation(
                "orbit/Farey correspondence",
                format!(
                    "n = {n}, step {}: x-numerator {} but q = {}",
                    f.index,
                    p.x_num(),
                    f.q
                ),
            ));
        }
        p = dynamics.step(&p)?;
    }
    if p != start {
        return Err(Error::violation(
            "orbit period",
            format!("n = {n}: T^A_n(1/n, 1) = {p}"),
        ));
    }
    Ok(())
}

/// `ι_i = n²(p_i·A_n − i·q_i)/(q_i·A_n)`, each term from the Farey stream.
pub fn iota_series(n: u64) -> Result<CocycleSeries<Rational>> {
    let a_n = farey_length(n)?.a_n;
    let n2 = BigInt::from(n) * BigInt::from(n);
    let terms = farey_stream(n)?
        .skip(1)
        .map(|f| {
            let num = f.p as i128 * a_n as i128 - f.index as i128 * f.q as i128;
            Rational::new(
                &n2 * BigInt::from(num),
                BigInt::from(f.q as i128 * a_n as i128),
            )
        })
        .collect();
    Ok(CocycleSeries {
        n,
        kind: SeriesKind::Iota,
        terms,
    })
}

/// `Σ|ι_i|` without materializing the series.
///
/// Terms are grouped by Farey denominator `q`: inside a group the numerators
/// `|p_i·A_n − i·q|` add as machine integers, so the exact combination only
/// touches `n` rationals.
pub fn iota_abs_sum(n: u64) -> Result<Rational> {
    let a_n = farey_length(n)?.a_n as i128;
    let mut by_q: Vec<i128> = vec![0; n as usize + 1];
    for f in farey_stream(n)?.skip(1) {
        let num = f.p as i128 * a_n - f.index as i128 * f.q as i128;
        by_q[f.q as usize] += num.abs();
    }
    let mut sum = ExactSum::new();
    for (q, s) in by_q.into_iter().enumerate().skip(1) {
        sum.add_parts(BigInt::from(s), BigInt::from(q));
    }
    let n2 = int(n as i64) * int(n as i64);
    Ok(sum.total() * n2 / int(a_n as i64))
}

/// `χ⁽ⁿ⁾(i, p) = Σ_{j=1..i} (R(T^{j−1}p) − n²/A_n)`.
pub fn cocycle_value(n: u64, i: u64, p: &FareyPoint) -> Result<Rational> {
    require_triangle(p)?;
    let a_n = farey_length(n)?.a_n;
    let mean = rat((n * n) as i64, a_n as i64);
    let mut sum = ExactSum::new();
    for q in points(*p).take(i as usize) {
        sum.add(&return_time(&q));
    }
    Ok(sum.total() - mean * int(i as i64))
}

/// Both sides of `χ(i1 + i2, p) = χ(i2, T^{i1}p) + χ(i1, p)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CocycleCheck {
    pub lhs: Rational,
    pub rhs: Rational,
}

impl CocycleCheck {
    pub fn holds(&self) -> bool {
        self.lhs == self.rhs
    }
}

pub fn cocycle(n: u64, i1: u64, i2: u64, p: &FareyPoint) -> Result<CocycleCheck> {
    require_triangle(p)?;
    let shifted = points(*p).nth(i1 as usize).expect("orbit is infinite");
    let lhs = cocycle_value(n, i1 + i2, p)?;
    let rhs = cocycle_value(n, i2, &shifted)? + cocycle_value(n, i1, p)?;
    Ok(CocycleCheck { lhs, rhs })
}

/// `𝓕ₙ(g) = Σ_{i=1}^{A_n} |Σ_{j<i} (g(T^j(1/n, 1)) − ḡₙ)|`, with `ḡₙ` the orbit
/// mean of `g`.
///
/// The orbit is walked twice (once for the mean) rather than stored.
pub fn f_n_functional<G: PointFunction + ?Sized>(g: &G, n: u64) -> Result<Rational> {
    let a_n = farey_length(n)?.a_n;
    let start = periodic_start(n)?;
    let total = points(start)
        .take(a_n as usize)
        .map(|p| g.eval(&p))
        .sum::<ExactSum>()
        .total();
    let mean = total / int(a_n as i64);
    let mut partial = Rational::zero();
    let mut out = ExactSum::new();
    for p in points(start).take(a_n as usize) {
        partial += g.eval(&p) - &mean;
        out.add(&partial.abs());
    }
    Ok(out.total())
}

/// `𝓕ₙ(k̂)` in machine integers.
///
/// With `t_i` twice the partial sum of `k̂ − 3`, the summand is
/// `|A_n·t_i − i·t_{A_n}| / (2A_n)`.
pub fn f_n_khat(n: u64) -> Result<Rational> {
    let a_n = farey_length(n)?.a_n;
    let start = periodic_start(n)?;
    let twice_k = |p: &FareyPoint| (itinerary(p) + itinerary_transpose(p) - 6) as i128;
    let t_total: i128 = points(start).take(a_n as usize).map(|p| twice_k(&p)).sum();
    let (mut t, mut acc) = (0i128, 0i128);
    for (i, p) in points(start).take(a_n as usize).enumerate() {
        t += twice_k(&p);
        let i = i as i128 + 1;
        acc += (a_n as i128 * t - i * t_total).abs();
    }
    Ok(Rational::new(
        BigInt::from(acc),
        BigInt::from(2 * a_n as i128),
    ))
}

/// `𝓕ₙ(R)`: partial sums of `R − n²/A_n` telescope to `ι_i`.
pub fn f_n_return_time(n: u64) -> Result<Rational> {
    iota_abs_sum(n)
}

/// Default grid for random triangle samples (prime).
pub const DEFAULT_SAMPLE_DEN: i64 = 1_000_003;

/// Uniform point of the triangle on the `den × den` grid, by rejection.
pub fn sample_triangle_point<R: Rng + ?Sized>(rng: &mut R, den: i64) -> FareyPoint {
    loop {
        let x = rng.gen_range(1..=den);
        let y = rng.gen_range(1..=den);
        if x + y > den {
            return FareyPoint::raw(x, y, den);
        }
    }
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Per-case interval for `R − k̂`: `lo` (inclusive or not) and exclusive `hi`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseBound {
    pub lo: Rational,
    pub lo_inclusive: bool,
    pub hi: Rational,
}

impl CaseBound {
    fn contains(&self, v: &Rational) -> bool {
        let above = if self.lo_inclusive {
            v >= &self.lo
        } else {
            v > &self.lo
        };
        above && v < &self.hi
    }
}

/// Interval for `(k, kᵀ)` up to transposition, or `None` for pairs that never
/// occur inside the triangle.
pub fn case_bound(k: i64, k_t: i64) -> Option<CaseBound> {
    let (lo, hi) = if k <= k_t { (k, k_t) } else { (k_t, k) };
    let b = |lo: Rational, lo_inclusive: bool, hi: Rational| {
        Some(CaseBound {
            lo,
            lo_inclusive,
            hi,
        })
    };
    match (lo, hi) {
        (2, 2) => b(int(-1), true, int(2)),
        (1, 2) => b(rat(-1, 2), false, rat(7, 12)),
        (2, 3) => b(rat(-5, 12), true, rat(5, 3)),
        (1, 3) => b(rat(-1, 2), true, rat(19, 15)),
        (2, 4) => b(rat(4, 15), true, rat(3, 2)),
        (1, m) if m >= 4 => b(rat(-1, 2), true, rat(3, 2) + rat(2, m)),
        _ => None,
    }
}

/// Checks `−1 <= R − k̂ < 2` and the per-case interval at one point.
pub fn check_r_minus_khat(p: &FareyPoint) -> Result<Rational> {
    require_triangle(p)?;
    let rec = StepRecord::at(*p);
    let v = rec.r_minus_khat();
    if v < int(-1) || v >= int(2) {
        return Err(Error::violation(
            "R - khat global bound",
            format!("{p}: R - khat = {v}"),
        ));
    }
    match case_bound(rec.k, rec.k_t) {
        Some(bound) if bound.contains(&v) => Ok(v),
        Some(_) => Err(Error::violation(
            "R - khat case bound",
            format!("{p}: (k, kT) = ({}, {}), R - khat = {v}", rec.k, rec.k_t),
        )),
        None => Err(Error::violation(
            "R - khat case bound",
            format!("{p}: unexpected (k, kT) = ({}, {})", rec.k, rec.k_t),
        )),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketStats {
    pub k: i64,
    pub k_t: i64,
    pub count: u64,
    pub min: Rational,
    pub max: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub samples: u64,
    pub seed: u64,
    pub global_min: Rational,
    pub global_max: Rational,
    pub buckets: Vec<BucketStats>,
}

pub fn r_minus_khat_bounds_check(samples: u64, seed: u64) -> Result<BoundsReport> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be >= 1".into()));
    }
    let mut rng = seeded_rng(seed);
    let mut buckets: BTreeMap<(i64, i64), BucketStats> = BTreeMap::new();
    for _ in 0..samples {
        let p = sample_triangle_point(&mut rng, DEFAULT_SAMPLE_DEN);
        let v = check_r_minus_khat(&p)?;
        let (k, k_t) = (itinerary(&p), itinerary_transpose(&p));
        let e = buckets.entry((k, k_t)).or_insert_with(|| BucketStats {
            k,
            k_t,
            count: 0,
            min: v.clone(),
            max: v.clone(),
        });
        e.count += 1;
        if v < e.min {
            e.min = v.clone();
        }
        if v > e.max {
            e.max = v;
        }
    }
    let buckets: Vec<BucketStats> = buckets.into_values().collect();
    let global_min = buckets
        .iter()
        .map(|b| b.min.clone())
        .min()
        .expect("samples >= 1");
    let global_max = buckets
        .iter()
        .map(|b| b.max.clone())
        .max()
        .expect("samples >= 1");
    Ok(BoundsReport {
        samples,
        seed,
        global_min,
        global_max,
        buckets,
    })
}
