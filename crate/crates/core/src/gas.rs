//! Generalized arithmetic sequences (GAS): positive sequences in which every
//! interior term divides the sum of its two neighbours.
//!
//! Positions are 1-based throughout (`a₁, …, aₙ`), so the elimination window
//! `m ∈ [4, n−3]` of the `h` identity reads the same as in the literature.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::bcz::{points, require_triangle};
use crate::error::{Error, Result};
use crate::exact::{int, FareyPoint, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GasSeq {
    terms: Vec<Rational>,
    cyclic: bool,
}

impl GasSeq {
    pub fn terms(&self) -> &[Rational] {
        &self.terms
    }

    pub fn into_terms(self) -> Vec<Rational> {
        self.terms
    }

    pub fn is_cyclic(&self) -> bool {
        self.cyclic
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `a_m`, 1-based.
    pub fn term(&self, m: usize) -> &Rational {
        &self.terms[m - 1]
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItinerarySeq {
    /// Position of the first value: 2 for plain sequences, 1 for cyclic ones.
    pub first: usize,
    pub values: Vec<i64>,
}

/// `(l + r)/m` when it is a positive integer.
fn integer_quotient(l: &Rational, r: &Rational, m: &Rational) -> Option<i64> {
    let q = (l + r) / m;
    if q.is_integer() && q.is_positive() {
        q.to_integer().to_i64()
    } else {
        None
    }
}

/// Neighbour positions (1-based) of `i` in a cyclic sequence of length `n`.
fn wrap(i: usize, n: usize) -> (usize, usize) {
    let prev = if i == 1 { n } else { i - 1 };
    let next = if i == n { 1 } else { i + 1 };
    (prev, next)
}

pub fn validate_gas(seq: Vec<Rational>, cyclic: bool) -> Result<GasSeq> {
    if seq.is_empty() {
        return Err(Error::TooShort { needed: 1, got: 0 });
    }
    if let Some(bad) = seq.iter().find(|t| !t.is_positive()) {
        return Err(Error::NonPositive(format!("sequence term {bad}")));
    }
    let n = seq.len();
    let a = |i: usize| &seq[i - 1];
    if cyclic {
        // With wrap-around indices the n = 1 and n = 2 cases of the definition
        // fall out of the general rule (a₁ | a₂ + a₂ and so on).
        for i in 1..=n {
            let (p, q) = wrap(i, n);
            if integer_quotient(a(p), a(q), a(i)).is_none() {
                return Err(Error::NotGas { index: i });
            }
        }
    } else {
        for i in 2..n {
            if integer_quotient(a(i - 1), a(i + 1), a(i)).is_none() {
                return Err(Error::NotGas { index: i });
            }
        }
    }
    Ok(GasSeq { terms: seq, cyclic })
}

/// `k_i = (a_{i−1} + a_{i+1})/a_i`: positions `2..=n−1`, or `1..=n` cyclically.
pub fn itinerary(seq: &GasSeq) -> Result<ItinerarySeq> {
    let n = seq.len();
    let quotient = |p: usize, i: usize, q: usize| {
        integer_quotient(seq.term(p), seq.term(q), seq.term(i)).ok_or(Error::NotGas { index: i })
    };
    if seq.cyclic {
        let values = (1..=n)
            .map(|i| {
                let (p, q) = wrap(i, n);
                quotient(p, i, q)
            })
            .collect::<Result<_>>()?;
        Ok(ItinerarySeq { first: 1, values })
    } else {
        if n < 3 {
            return Err(Error::TooShort { needed: 3, got: n });
        }
        let values = (2..n)
            .map(|i| quotient(i - 1, i, i + 1))
            .collect::<Result<_>>()?;
        Ok(ItinerarySeq { first: 2, values })
    }
}

fn is_strict_max(seq: &GasSeq, m: usize) -> bool {
    let n = seq.len();
    let (p, q) = if seq.cyclic {
        if n < 2 {
            return false;
        }
        wrap(m, n)
    } else {
        if m < 2 || m + 1 > n {
            return false;
        }
        (m - 1, m + 1)
    };
    seq.term(m) > seq.term(p) && seq.term(m) > seq.term(q)
}

fn check_max_identity(seq: &GasSeq, m: usize) -> Result<()> {
    let n = seq.len();
    let (p, q) = if seq.cyclic {
        wrap(m, n)
    } else {
        (m - 1, m + 1)
    };
    if seq.term(m) != &(seq.term(p) + seq.term(q)) {
        return Err(Error::violation(
            "local maximum identity",
            format!(
                "a_{m} = {} but neighbours sum to {}",
                seq.term(m),
                seq.term(p) + seq.term(q)
            ),
        ));
    }
    Ok(())
}

/// Strict local maxima, asserting `a_m = a_{m−1} + a_{m+1}` at each.
pub fn find_local_maxima(seq: &GasSeq) -> Result<Vec<usize>> {
    let n = seq.len();
    let candidates: Vec<usize> = if seq.cyclic {
        (1..=n).collect()
    } else {
        (2..n).collect()
    };
    let mut out = Vec::new();
    for m in candidates {
        if is_strict_max(seq, m) {
            check_max_identity(seq, m)?;
            out.push(m);
        }
    }
    Ok(out)
}

/// Removes the local maximum at position `m` and revalidates.
pub fn eliminate(seq: &GasSeq, m: usize) -> Result<GasSeq> {
    let n = seq.len();
    let long_enough = if seq.cyclic { n >= 2 } else { n >= 3 };
    if !long_enough {
        return Err(Error::TooShort {
            needed: if seq.cyclic { 2 } else { 3 },
            got: n,
        });
    }
    if m == 0 || m > n || !is_strict_max(seq, m) {
        return Err(Error::NotLocalMaximum(m));
    }
    check_max_identity(seq, m)?;
    let mut terms = seq.terms.clone();
    terms.remove(m - 1);
    validate_gas(terms, seq.cyclic).map_err(|e| match e {
        Error::NotGas { index } => Error::violation(
            "GAS closure",
            format!("eliminating a_{m} breaks divisibility at {index}"),
        ),
        other => other,
    })
}

/// `((a_i + a_{i+2})/a_{i+1} + (a_{i−1} + a_{i+1})/a_i)/2 − 3` at `(a_{i−1}, a_i, a_{i+1}, a_{i+2})`.
fn window(w0: &Rational, w1: &Rational, w2: &Rational, w3: &Rational) -> Rational {
    ((w1 + w3) / w2 + (w0 + w2) / w1) / int(2) - int(3)
}

/// `h(a₁, …, aₙ) = Σ_{i=2}^{n−2}` of the window terms; needs `n >= 4`.
pub fn h_value(seq: &[Rational]) -> Result<Rational> {
    if seq.len() < 4 {
        return Err(Error::TooShort {
            needed: 4,
            got: seq.len(),
        });
    }
    check_positive(seq)?;
    Ok(seq
        .windows(4)
        .map(|w| window(&w[0], &w[1], &w[2], &w[3]))
        .fold(Rational::zero(), |acc, v| acc + v))
}

/// `ĥ`: the same window sum taken cyclically over all `n` positions.
pub fn h_hat_value(seq: &[Rational]) -> Result<Rational> {
    let n = seq.len();
    if n == 0 {
        return Err(Error::TooShort { needed: 1, got: 0 });
    }
    check_positive(seq)?;
    let at = |i: isize| &seq[i.rem_euclid(n as isize) as usize];
    Ok((0..n as isize)
        .map(|i| window(at(i - 1), at(i), at(i + 1), at(i + 2)))
        .fold(Rational::zero(), |acc, v| acc + v))
}

fn check_positive(seq: &[Rational]) -> Result<()> {
    match seq.iter().find(|t| !t.is_positive()) {
        Some(bad) => Err(Error::NonPositive(format!("sequence term {bad}"))),
        None => Ok(()),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reduction {
    pub seq: GasSeq,
    /// `ĥ` for cyclic input, `h` otherwise.
    pub invariant: Rational,
    pub eliminated: usize,
}

/// Eliminates a largest term (the leftmost among ties) while it is a strict
/// local maximum.
///
/// Cyclic sequences may lose any term; plain ones only terms away from the
/// first and last three, so the `h` identity applies at every step. Each
/// elimination checks the local-maximum identity and the two divisibilities
/// that change, which keeps the whole reduction `O(n log n)`.
pub fn reduce_to_simplest(seq: &GasSeq) -> Result<Reduction> {
    let n = seq.len();
    if !seq.cyclic && n < 4 {
        return Err(Error::TooShort { needed: 4, got: n });
    }
    let terms = &seq.terms;
    let mut prev: Vec<usize> = (0..n).map(|i| if i == 0 { n - 1 } else { i - 1 }).collect();
    let mut next: Vec<usize> = (0..n).map(|i| if i + 1 == n { 0 } else { i + 1 }).collect();
    let mut alive = vec![true; n];

    let eligible = |i: usize| seq.cyclic || (i >= 3 && i + 4 <= n);
    let mut heap: BinaryHeap<(&Rational, Reverse<usize>)> = (0..n)
        .filter(|&i| eligible(i))
        .map(|i| (&terms[i], Reverse(i)))
        .collect();

    let divides =
        |l: usize, m: usize, r: usize| integer_quotient(&terms[l], &terms[r], &terms[m]).is_some();

    while let Some((value, Reverse(m))) = heap.pop() {
        if !alive[m] {
            continue;
        }
        let (p, q) = (prev[m], next[m]);
        if !(value > &terms[p] && value > &terms[q]) {
            break;
        }
        if value != &(&terms[p] + &terms[q]) {
            return Err(Error::violation(
                "local maximum identity",
                format!(
                    "a_{} = {value} but neighbours sum to {}",
                    m + 1,
                    &terms[p] + &terms[q]
                ),
            ));
        }
        alive[m] = false;
        next[p] = q;
        prev[q] = p;
        // Only the two neighbours see a new pair of neighbours.
        for &c in &[p, q] {
            let interior = seq.cyclic || (c != 0 && c != n - 1);
            if interior && !divides(prev[c], c, next[c]) {
                return Err(Error::violation(
                    "GAS closure",
                    format!(
                        "eliminating a_{} breaks divisibility at original position {}",
                        m + 1,
                        c + 1
                    ),
                ));
            }
        }
    }

    let reduced: Vec<Rational> = (0..n)
        .filter(|&i| alive[i])
        .map(|i| terms[i].clone())
        .collect();
    if seq.cyclic {
        // A largest term that is not a strict local maximum forces a constant
        // sequence; anything else is an upstream inconsistency.
        if reduced.iter().any(|t| t != &reduced[0]) && reduced.len() > 1 {
            return Err(Error::violation(
                "GAS reduction",
                format!(
                    "stopped at a non-constant sequence of length {}",
                    reduced.len()
                ),
            ));
        }
    }
    let invariant = if seq.cyclic {
        h_hat_value(&reduced)?
    } else {
        h_value(&reduced)?
    };
    Ok(Reduction {
        eliminated: n - reduced.len(),
        seq: GasSeq {
            terms: reduced,
            cyclic: seq.cyclic,
        },
        invariant,
    })
}

/// x-coordinates of `T⁰(p), …, T^{len−1}(p)`.
pub fn bcz_sequence(p: &FareyPoint, len: usize) -> Result<Vec<Rational>> {
    require_triangle(p)?;
    Ok(points(*p).take(len).map(|q| q.a()).collect())
}

/// How much of an expansion the input represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CfMode {
    /// The input is the complete expansion of a rational; the output has the
    /// same value.
    Finite,
    /// The input is a prefix of an infinite expansion; the output holds
    /// exactly the negative digits that prefix determines.
    Prefix,
}

fn check_cf(cf: &[i64]) -> Result<()> {
    match cf.split_first() {
        None => Err(Error::MalformedContinuedFraction("empty expansion".into())),
        Some((a0, _)) if *a0 < 0 => {
            Err(Error::MalformedContinuedFraction(format!("a0 = {a0} < 0")))
        }
        Some((_, rest)) => match rest.iter().position(|&a| a < 1) {
            Some(i) => Err(Error::MalformedContinuedFraction(format!(
                "a{} = {} < 1",
                i + 1,
                rest[i]
            ))),
            None => Ok(()),
        },
    }
}

/// Regular `[a₀; a₁, a₂, …]` to negative `[b₀; b₁, b₂, …]₋`.
///
/// `b₀ = a₀ + 1`, `b_{c_i} = a_{2i} + 2` with `c_i = a₁ + a₃ + … + a_{2i−1}`,
/// and every other digit is 2. A finite expansion ending at `a_{2i}` closes
/// with `a_{2i} + 1`; one ending at `a_{2i−1}` closes after `a_{2i−1} − 1`
/// twos; a bare integer `[m]` stays `[m]`.
pub fn negative_cf_from_cf(cf: &[i64], mode: CfMode) -> Result<Vec<i64>> {
    check_cf(cf)?;
    if cf.len() == 1 && mode == CfMode::Finite {
        return Ok(vec![cf[0]]);
    }
    let mut out = vec![cf[0] + 1];
    let rest = &cf[1..];
    for (i, pair) in rest.chunks(2).enumerate() {
        let odd = pair[0];
        let last = 2 * i + pair.len() == rest.len();
        match (pair.get(1), mode) {
            (Some(&even), _) => {
                out.extend(std::iter::repeat_n(2, (odd - 1) as usize));
                let closing = if last && mode == CfMode::Finite {
                    even + 1
                } else {
                    even + 2
                };
                out.push(closing);
            }
            // Finite: the trailing twos close the expansion. Prefix: b_{c_i}
            // is still unknown, the twos before it are not.
            (None, _) => out.extend(std::iter::repeat_n(2, (odd - 1) as usize)),
        }
    }
    Ok(out)
}

/// Regular continued-fraction digits of a rational (`a₀ = ⌊x⌋`, `aᵢ >= 1`).
pub fn cf_of_rational(x: &Rational) -> Result<Vec<i64>> {
    if x.is_negative() {
        return Err(Error::InvalidArgument(format!("{x} is negative")));
    }
    let mut out = Vec::new();
    let (mut p, mut q) = (x.numer().clone(), x.denom().clone());
    while !q.is_zero() {
        let (d, r) = p.div_rem(&q);
        out.push(
            d.to_i64()
                .ok_or_else(|| Error::Overflow(format!("partial quotient of {x}")))?,
        );
        p = q;
        q = r;
    }
    Ok(out)
}

/// Exact value of `[b₀; b₁, …, bₙ]₋`.
pub fn negative_cf_value(ncf: &[i64]) -> Result<Rational> {
    let conv = negative_cf_convergents(ncf)?;
    let (r, s) = conv.last().expect("nonempty");
    Ok(Rational::new(BigInt::from(*r), BigInt::from(*s)))
}

/// Convergents `r_n/s_n` of `[b₀; b₁, …]₋` from `r_n = b_n r_{n−1} − r_{n−2}`
/// (and likewise `s_n`), seeded with `r₋₁ = 1`, `s₋₁ = 0`.
///
/// The numerators and denominators are checked to form generalized arithmetic
/// sequences; numerators only when `b₀ >= 1`, since otherwise they need not be
/// positive.
pub fn negative_cf_convergents(ncf: &[i64]) -> Result<Vec<(i128, i128)>> {
    let (&b0, rest) = ncf
        .split_first()
        .ok_or_else(|| Error::MalformedContinuedFraction("empty expansion".into()))?;
    if let Some(i) = rest.iter().position(|&b| b < 2) {
        return Err(Error::MalformedContinuedFraction(format!(
            "b{} = {} < 2",
            i + 1,
            rest[i]
        )));
    }
    let overflow = || Error::Overflow("negative continued fraction convergent".into());
    let mut out = vec![(b0 as i128, 1i128)];
    let (mut r_prev, mut s_prev) = (1i128, 0i128);
    for &b in rest {
        let (r, s) = *out.last().expect("nonempty");
        let r_next = (b as i128)
            .checked_mul(r)
            .and_then(|v| v.checked_sub(r_prev))
            .ok_or_else(overflow)?;
        let s_next = (b as i128)
            .checked_mul(s)
            .and_then(|v| v.checked_sub(s_prev))
            .ok_or_else(overflow)?;
        out.push((r_next, s_next));
        r_prev = r;
        s_prev = s;
    }
    let as_seq = |f: fn(&(i128, i128)) -> i128| -> Vec<Rational> {
        out.iter()
            .map(|c| Rational::from_integer(BigInt::from(f(c))))
            .collect()
    };
    let check = |terms: Vec<Rational>, what: &str| -> Result<()> {
        validate_gas(terms, false)
            .map(|_| ())
            .map_err(|e| Error::violation("negative CF convergents", format!("{what}: {e}")))
    };
    check(as_seq(|c| c.1), "denominators")?;
    if b0 >= 1 {
        check(as_seq(|c| c.0), "numerators")?;
    }
    Ok(out)
}

/// `ĥ` of a constant sequence of length `len`; used as the expected value for
/// irreducible cyclic sequences.
pub fn h_hat_of_constant(len: usize) -> Rational {
    match len {
        0 => Rational::zero(),
        1 => -Rational::one(),
        // Each window term is (2 + 2)/2 − 3.
        _ => int(-(len as i64)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bcz::{sample_triangle_point, seeded_rng, DEFAULT_SAMPLE_DEN};
    use crate::exact::rat;
    use crate::farey::{denominator_stream, farey_length};
    use proptest::prelude::*;
    use rand::Rng;

    fn ints(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| int(x)).collect()
    }

    fn farey_cycle(n: u64) -> Vec<Rational> {
        let a_n = farey_length(n).unwrap().a_n as usize;
        denominator_stream(n)
            .unwrap()
            .skip(1)
            .take(a_n)
            .map(|q| int(q as i64))
            .collect()
    }

    #[test]
    fn validation_examples() {
        assert!(validate_gas(ints(&[1, 3, 2, 3, 1]), true).is_ok());
        assert!(validate_gas(ints(&[1, 1, 2, 1, 1]), false).is_ok());
        assert!(matches!(
            validate_gas(ints(&[1, 2, 4]), false),
            Err(Error::NotGas { index: 2 })
        ));
        assert!(matches!(
            validate_gas(ints(&[1, 0, 1]), false),
            Err(Error::NonPositive(_))
        ));
        assert!(validate_gas(vec![], true).is_err());
        // n = 1 and n = 2 cyclic special cases.
        assert!(validate_gas(ints(&[5]), true).is_ok());
        assert!(validate_gas(ints(&[1, 2]), true).is_ok());
        assert!(validate_gas(ints(&[2, 3]), true).is_err());
        // Rational terms: the quotient must be an integer.
        assert!(validate_gas(vec![rat(1, 3), rat(1, 2), rat(2, 3)], false).is_ok());
        assert!(validate_gas(vec![rat(1, 3), rat(1, 2), rat(1, 2)], false).is_err());
    }

    #[test]
    fn itinerary_examples() {
        let s = validate_gas(ints(&[3, 2, 3, 1]), true).unwrap();
        assert_eq!(itinerary(&s).unwrap().values, vec![1, 3, 1, 6]);
        let s = validate_gas(ints(&[1, 1, 2, 1, 1]), false).unwrap();
        let it = itinerary(&s).unwrap();
        assert_eq!((it.first, it.values), (2, vec![3, 1, 3]));
        assert!(itinerary(&validate_gas(ints(&[1, 1]), false).unwrap()).is_err());
    }

    #[test]
    fn itinerary_of_orbit_is_bcz_itinerary() {
        let mut rng = seeded_rng(5);
        for _ in 0..100 {
            let p = sample_triangle_point(&mut rng, 10_007);
            let xs = bcz_sequence(&p, 30).unwrap();
            let it = itinerary(&validate_gas(xs, false).unwrap()).unwrap();
            // a_{i+1} = k(T^{i−1}p)·a_i − a_{i−1}: position i carries k of the previous point.
            let ks: Vec<i64> = points(p)
                .take(28)
                .map(|q| crate::bcz::itinerary(&q))
                .collect();
            assert_eq!(it.values, ks);
        }
    }

    #[test]
    fn local_maxima_examples() {
        let s = validate_gas(ints(&[1, 3, 2, 3, 1]), true).unwrap();
        assert_eq!(find_local_maxima(&s).unwrap(), vec![2, 4]);
        let s = validate_gas(ints(&[1, 1, 2, 1, 1]), false).unwrap();
        assert_eq!(find_local_maxima(&s).unwrap(), vec![3]);
        let s = validate_gas(ints(&[4, 4, 4]), false).unwrap();
        assert!(find_local_maxima(&s).unwrap().is_empty());
    }

    #[test]
    fn eliminate_examples() {
        let s = validate_gas(ints(&[1, 3, 2, 3, 1]), true).unwrap();
        let e = eliminate(&s, 2).unwrap();
        assert_eq!(e.terms(), ints(&[1, 2, 3, 1]).as_slice());
        assert!(e.is_cyclic());
        let s = validate_gas(ints(&[1, 1, 2, 1, 1]), false).unwrap();
        assert_eq!(
            eliminate(&s, 3).unwrap().terms(),
            ints(&[1, 1, 1, 1]).as_slice()
        );
        assert!(matches!(eliminate(&s, 2), Err(Error::NotLocalMaximum(2))));
    }

    #[test]
    fn h_examples() {
        assert_eq!(h_value(&ints(&[1, 1, 2, 1, 1])).unwrap(), int(-2));
        assert!(h_value(&ints(&[1, 2, 1])).is_err());
        // All itinerary values 3: the sequence 1, 1, 2, 5, 13, … (every other Fibonacci).
        assert_eq!(h_value(&ints(&[1, 2, 5, 13, 34, 89])).unwrap(), int(0));
        assert_eq!(h_hat_value(&ints(&[7])).unwrap(), int(-1));
        assert_eq!(h_hat_value(&ints(&[3, 2, 3, 1])).unwrap(), int(-1));
        assert_eq!(h_hat_value(&ints(&[4, 4])).unwrap(), int(-2));
        assert!(h_hat_value(&[]).is_err());
    }

    #[test]
    fn h_hat_of_farey_denominators() {
        for n in 1..=200 {
            let q = farey_cycle(n);
            assert_eq!(h_hat_value(&q).unwrap(), int(-1), "direct n={n}");
            let seq = validate_gas(q, true).unwrap();
            let red = reduce_to_simplest(&seq).unwrap();
            assert_eq!(red.seq.terms(), &[int(1)], "n={n}");
            assert_eq!(red.invariant, int(-1), "reduced n={n}");
        }
    }

    #[test]
    fn reduce_examples() {
        let s = validate_gas(ints(&[3, 2, 3, 1]), true).unwrap();
        let r = reduce_to_simplest(&s).unwrap();
        assert_eq!(
            (r.seq.terms().to_vec(), r.invariant.clone(), r.eliminated),
            (ints(&[1]), int(-1), 3)
        );
        let s = validate_gas(ints(&[5, 5]), true).unwrap();
        let r = reduce_to_simplest(&s).unwrap();
        assert_eq!((r.eliminated, r.invariant), (0, int(-2)));
        assert_eq!(h_hat_of_constant(2), int(-2));
        // Nothing eligible in [4, n−3].
        let s = validate_gas(ints(&[1, 1, 2, 1, 1, 1]), false).unwrap();
        let r = reduce_to_simplest(&s).unwrap();
        assert_eq!(r.seq, s);
        assert_eq!(r.invariant, h_value(s.terms()).unwrap());
    }

    #[test]
    fn reduce_matches_naive_elimination() {
        // Naive oracle: rescan for the leftmost largest eligible term each round.
        fn naive(seq: &GasSeq) -> Vec<Rational> {
            let mut cur = seq.clone();
            loop {
                let n = cur.len();
                let range: Vec<usize> = if cur.cyclic {
                    (1..=n).collect()
                } else {
                    (4..=n.saturating_sub(3)).collect()
                };
                let Some(best) =
                    range
                        .iter()
                        .copied()
                        .reduce(|b, m| if cur.term(m) > cur.term(b) { m } else { b })
                else {
                    return cur.terms;
                };
                if !is_strict_max(&cur, best) {
                    return cur.terms;
                }
                cur = eliminate(&cur, best).unwrap();
            }
        }
        let mut rng = seeded_rng(21);
        for _ in 0..200 {
            let p = sample_triangle_point(&mut rng, 1009);
            let len = rng.gen_range(4..60);
            let s = validate_gas(bcz_sequence(&p, len).unwrap(), false).unwrap();
            assert_eq!(
                reduce_to_simplest(&s).unwrap().seq.terms(),
                naive(&s).as_slice()
            );
        }
        for n in 1..=30 {
            let s = validate_gas(farey_cycle(n), true).unwrap();
            assert_eq!(
                reduce_to_simplest(&s).unwrap().seq.terms(),
                naive(&s).as_slice()
            );
        }
    }

    #[test]
    fn closure_and_identities_on_orbit_segments() {
        let mut rng = seeded_rng(8);
        for _ in 0..1000 {
            let p = sample_triangle_point(&mut rng, DEFAULT_SAMPLE_DEN);
            let len = rng.gen_range(7..40);
            let c = rat(rng.gen_range(1..50), rng.gen_range(1..50));
            let xs: Vec<Rational> = bcz_sequence(&p, len)
                .unwrap()
                .into_iter()
                .map(|x| x * &c)
                .collect();
            let seq = validate_gas(xs, false).unwrap();
            let h = h_value(seq.terms()).unwrap();
            for m in find_local_maxima(&seq).unwrap() {
                let e = eliminate(&seq, m).unwrap();
                if (4..=len - 3).contains(&m) {
                    assert_eq!(h_value(e.terms()).unwrap(), h, "{p} m={m}");
                }
            }
            assert_eq!(reduce_to_simplest(&seq).unwrap().invariant, h);
        }
    }

    #[test]
    fn h_hat_identity_on_cyclic_sequences() {
        for n in 2..=40 {
            let base = farey_cycle(n);
            for rot in [0, 1, base.len() / 2] {
                let mut v = base.clone();
                let k = rot % v.len();
                v.rotate_left(k);
                let seq = validate_gas(v, true).unwrap();
                let hh = h_hat_value(seq.terms()).unwrap();
                for m in find_local_maxima(&seq).unwrap() {
                    assert_eq!(
                        h_hat_value(eliminate(&seq, m).unwrap().terms()).unwrap(),
                        hh
                    );
                }
            }
        }
        // Both n = 3 branches: (1, 2, 3) and (1, 1, 2).
        for v in [[1, 2, 3], [1, 1, 2]] {
            let seq = validate_gas(ints(&v), true).unwrap();
            let hh = h_hat_value(seq.terms()).unwrap();
            assert_eq!(
                h_hat_value(eliminate(&seq, 3).unwrap().terms()).unwrap(),
                hh
            );
        }
    }

    #[test]
    fn ncf_examples() {
        assert_eq!(
            negative_cf_from_cf(&[1, 1, 1, 1, 1], CfMode::Prefix).unwrap(),
            vec![2, 3, 3]
        );
        assert_eq!(
            negative_cf_from_cf(&[1, 2, 2], CfMode::Finite).unwrap(),
            vec![2, 2, 3]
        );
        assert_eq!(negative_cf_from_cf(&[5], CfMode::Finite).unwrap(), vec![5]);
        assert_eq!(
            negative_cf_from_cf(&[1, 2], CfMode::Finite).unwrap(),
            vec![2, 2]
        );
        assert!(negative_cf_from_cf(&[], CfMode::Finite).is_err());
        assert!(negative_cf_from_cf(&[1, 0, 2], CfMode::Finite).is_err());
        assert!(negative_cf_from_cf(&[-1, 2], CfMode::Finite).is_err());
        assert_eq!(
            negative_cf_convergents(&[2, 3, 3]).unwrap(),
            vec![(2, 1), (5, 3), (13, 8)]
        );
        assert_eq!(negative_cf_value(&[2, 2, 3]).unwrap(), rat(7, 5));
        assert!(negative_cf_convergents(&[2, 1]).is_err());
    }

    #[test]
    fn golden_prefix_convergents_approach_phi() {
        let cf = vec![1; 31];
        let ncf = negative_cf_from_cf(&cf, CfMode::Prefix).unwrap();
        assert!(ncf[1..].iter().all(|&b| b == 3));
        let (r, s) = *negative_cf_convergents(&ncf).unwrap().last().unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((r as f64 / s as f64 - phi).abs() < 1e-12);
    }

    #[test]
    fn odd_convergents_reappear() {
        // p_{2i−1}/q_{2i−1} = r_{c_i − 1}/s_{c_i − 1}.
        let cf = [2i64, 3, 1, 4, 2, 1, 5, 2, 3];
        let ncf = negative_cf_from_cf(&cf, CfMode::Prefix).unwrap();
        let conv = negative_cf_convergents(&ncf).unwrap();
        let (mut p, mut q, mut p1, mut q1) = (cf[0] as i128, 1i128, 1i128, 0i128);
        let mut c = 0usize;
        for (j, &a) in cf.iter().enumerate().skip(1) {
            (p, p1) = (a as i128 * p + p1, p);
            (q, q1) = (a as i128 * q + q1, q);
            if j % 2 == 1 {
                c += a as usize;
                let (r, s) = conv[c - 1];
                assert_eq!(p * s, r * q, "j={j}");
            }
        }
    }

    proptest! {
        #[test]
        fn finite_convention_preserves_value(num in 1i64..5000, den in 1i64..5000) {
            let x = rat(num, den);
            let cf = cf_of_rational(&x).unwrap();
            let ncf = negative_cf_from_cf(&cf, CfMode::Finite).unwrap();
            prop_assert_eq!(negative_cf_value(&ncf).unwrap(), x);
        }

        #[test]
        fn scaled_orbit_segments_are_gas(x in 1i64..=997, y in 1i64..=997, len in 3usize..200, c in 1i64..100, d in 1i64..100) {
            prop_assume!(x + y > 997);
            let p = FareyPoint::in_triangle(x, y, 997).unwrap();
            let xs: Vec<Rational> = bcz_sequence(&p, len).unwrap().into_iter().map(|t| t * rat(c, d)).collect();
            prop_assert!(validate_gas(xs, false).is_ok());
        }
    }
}
