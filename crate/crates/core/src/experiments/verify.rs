//! The full invariant suite behind `verify --n-max <n>`.

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bcz::{
    check_r_minus_khat, cocycle, f_n_functional, iota_abs_sum, iota_series, orbit_farey_check,
    periodic_start, r_minus_khat_bounds_check, theta_abs_sum_with, theta_series, Dynamics,
};
use crate::error::{Error, Result};
use crate::exact::{int, rat, HalfInteger, Rational};
use crate::excursion::{
    build_excursion_with, energy_bound_checks, moduli_coordinates, monotonicity_check,
    reset_sum_check, theta_reset_at_r_i, zeta_bounds_check, BuildOptions, ModuliPoint,
};
use crate::farey::{farey_length, farey_stream, totients};
use crate::functions::return_time;
use crate::gas::{h_hat_value, reduce_to_simplest, validate_gas};

/// Witnesses kept per check.
const MAX_WITNESSES: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub n_max: u64,
    /// Nonzero values corrupt the map, to exercise the harness itself.
    pub itinerary_offset: i64,
    /// Excursions are checked for every pair of endpoints with denominators
    /// up to this.
    pub excursion_max_den: u64,
    pub random_points: u64,
    pub seed: u64,
}

impl VerifyOptions {
    pub fn new(n_max: u64) -> Self {
        VerifyOptions {
            n_max,
            itinerary_offset: 0,
            excursion_max_den: n_max.min(24),
            random_points: 20_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub cases: u64,
    pub failures: u64,
    pub witnesses: Vec<String>,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub n_max: u64,
    pub itinerary_offset: i64,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl VerifySummary {
    pub fn failed_checks(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

/// Runs `f` on every case in parallel; each `Err` is a failure whose message
/// (prefixed with the case label) becomes a witness.
fn run_check<T, L, F>(name: &str, cases: Vec<T>, label: L, f: F) -> CheckResult
where
    T: Send + Sync,
    L: Fn(&T) -> String + Sync,
    F: Fn(&T) -> Result<()> + Sync,
{
    let failures: Vec<String> = cases
        .par_iter()
        .filter_map(|c| f(c).err().map(|e| format!("{}: {e}", label(c))))
        .collect();
    CheckResult {
        name: name.to_string(),
        cases: cases.len() as u64,
        failures: failures.len() as u64,
        witnesses: failures.into_iter().take(MAX_WITNESSES).collect(),
    }
}

fn expect(cond: bool, check: &str, witness: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::violation(check, witness()))
    }
}

pub fn verify_all(n_max: u64) -> Result<VerifySummary> {
    verify_all_with(&VerifyOptions::new(n_max))
}

pub fn verify_all_with(opts: &VerifyOptions) -> Result<VerifySummary> {
    if opts.n_max < 3 {
        return Err(Error::InvalidArgument(format!(
            "n_max must be >= 3, got {}",
            opts.n_max
        )));
    }
    let d = Dynamics {
        itinerary_offset: opts.itinerary_offset,
    };
    let orders: Vec<u64> = (1..=opts.n_max).collect();
    let small: Vec<u64> = (1..=opts.n_max.min(60)).collect();
    let by_n = |n: &u64| format!("n = {n}");
    let phi = totients(opts.n_max);

    let mut checks = vec![
        run_check("farey", orders.clone(), by_n, |&n| {
            let a_n = farey_length(n)?.a_n;
            let phi_sum: u64 = phi[1..=n as usize].iter().map(|&v| v as u64).sum();
            expect(a_n == phi_sum, "farey length", || {
                format!("A_n = {a_n}, totient sum {phi_sum}")
            })?;
            let terms: Vec<_> = farey_stream(n)?.collect();
            expect(terms.len() as u64 == a_n + 1, "farey length", || {
                format!("{} terms", terms.len())
            })?;
            for w in terms.windows(2) {
                let (l, r) = (w[0], w[1]);
                expect(
                    r.p * l.q - l.p * r.q == 1 && l.q + r.q > n,
                    "farey neighbours",
                    || format!("{}/{} then {}/{}", l.p, l.q, r.p, r.q),
                )?;
            }
            Ok(())
        }),
        run_check("orbit_farey", orders.clone(), by_n, |&n| {
            orbit_farey_check(n, &d)
        }),
        run_check("theta_terminal", orders.clone(), by_n, |&n| {
            let t = theta_abs_sum_with(n, &d)?;
            expect(
                t.terminal == HalfInteger::from_integer(-1),
                "theta terminal",
                || format!("theta_A_n = {}", t.terminal),
            )
        }),
        run_check("theta_n3", vec![3u64], by_n, |&n| {
            let got: Vec<i128> = theta_series(n)?
                .terms
                .iter()
                .map(|t| t.twice_value())
                .collect();
            expect(got == [1, -1, -3, -2], "theta series", || {
                format!("twice theta = {got:?}")
            })
        }),
        run_check("iota", small.clone(), by_n, |&n| {
            let series = iota_series(n)?;
            expect(
                series.last().is_some_and(Zero::is_zero),
                "iota terminal",
                || "iota_A_n != 0".into(),
            )?;
            let sum = iota_abs_sum(n)?;
            expect(series.abs_sum() == sum, "iota sum", || {
                format!("streamed {sum} vs {}", series.abs_sum())
            })?;
            let f_r = f_n_functional(&return_time, n)?;
            expect(f_r == sum, "F_n(R)", || {
                format!("F_n(R) = {f_r}, sum |iota| = {sum}")
            })?;
            if n == 3 {
                expect(sum == rat(3, 2), "iota n = 3", || {
                    format!("sum |iota| = {sum}")
                })?;
            }
            Ok(())
        }),
        run_check("cocycle", small.clone(), by_n, |&n| {
            let p = periodic_start(n)?;
            for (i1, i2) in [(0, 1), (1, 2), (3, 5), (7, 11)] {
                let c = cocycle(n, i1, i2, &p)?;
                expect(c.holds(), "cocycle", || {
                    format!("i1 = {i1}, i2 = {i2}: {} != {}", c.lhs, c.rhs)
                })?;
            }
            Ok(())
        }),
        run_check("theta_reset", small.clone(), by_n, |&n| {
            for i in 1..=n {
                theta_reset_at_r_i(n, i)?;
            }
            Ok(())
        }),
        run_check("gas", orders.clone(), by_n, |&n| {
            let a_n = farey_length(n)?.a_n;
            let mut p = periodic_start(n)?;
            let mut seq = Vec::with_capacity(a_n as usize);
            for _ in 0..a_n {
                seq.push(int(p.x_num()));
                p = d.step(&p)?;
            }
            let h = h_hat_value(&seq)?;
            expect(h == -Rational::one(), "h-hat of Farey denominators", || {
                format!("h-hat = {h}")
            })?;
            let gas = validate_gas(seq, true)?;
            let red = reduce_to_simplest(&gas)?;
            expect(
                red.invariant == -Rational::one(),
                "h-hat after elimination",
                || {
                    format!(
                        "h-hat = {} after {} eliminations",
                        red.invariant, red.eliminated
                    )
                },
            )
        }),
        run_check("r_minus_khat_orbits", orders.clone(), by_n, |&n| {
            let a_n = farey_length(n)?.a_n;
            let mut p = periodic_start(n)?;
            for _ in 0..a_n {
                check_r_minus_khat(&p)?;
                p = d.step(&p)?;
            }
            Ok(())
        }),
        run_check(
            "r_minus_khat_random",
            vec![opts.seed],
            |s| format!("seed = {s}"),
            |&seed| {
                if opts.random_points > 0 {
                    r_minus_khat_bounds_check(opts.random_points, seed)?;
                }
                Ok(())
            },
        ),
    ];

    let coords = moduli_coordinates(opts.excursion_max_den.max(1))?;
    let pairs: Vec<(Rational, Rational)> = coords
        .iter()
        .flat_map(|a| coords.iter().map(move |b| (a.clone(), b.clone())))
        .collect();
    let build = BuildOptions {
        verify: true,
        dynamics: d,
        ..BuildOptions::default()
    };
    let by_pair = |(a, b): &(Rational, Rational)| format!("({a}, {b})");
    checks.push(run_check("excursions", pairs.clone(), by_pair, |(a, b)| {
        let m = ModuliPoint::new(a.clone(), b.clone())?;
        let e = build_excursion_with(&m, &build)?;
        reset_sum_check(&e)?;
        if e.length() >= 4 {
            expect(monotonicity_check(&e)?, "monotonicity", || {
                format!("{:?}", e.stats())
            })?;
            zeta_bounds_check(&e)?;
        }
        Ok(())
    }));
    let shallow: Vec<(Rational, Rational)> = pairs
        .into_iter()
        .filter(|(a, b)| a.denom() <= &12.into() && b.denom() <= &12.into())
        .collect();
    checks.push(run_check("energy_bounds", shallow, by_pair, |(a, b)| {
        let m = ModuliPoint::new(a.clone(), b.clone())?;
        let depth = std::cmp::max(a.recip(), b.recip());
        energy_bound_checks(&m, &depth)?;
        Ok(())
    }));

    let passed = checks.iter().all(CheckResult::passed);
    Ok(VerifySummary {
        n_max: opts.n_max,
        itinerary_offset: opts.itinerary_offset,
        passed,
        checks,
    })
}
