//! Excursion averages of step functions against their exact integrals.

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{rat, to_f64, Rational};
use crate::excursion::{excursion_sum, ModuliPoint};
use crate::farey::farey_length;
use crate::functions::{PointFunction, StepFunction};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquidistRow {
    pub n: u64,
    #[serde(rename = "A_n")]
    pub a_n: u64,
    /// `(pq/A_n)·Σ f` over the excursion of `(q/n, p/n)`, exact.
    pub value: String,
    pub value_float: f64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquidistReport {
    pub p: u64,
    pub q: u64,
    pub function: String,
    /// `∫_Ω f dm` with `dm = 2 da db`.
    pub integral: String,
    pub integral_float: f64,
    pub rows: Vec<EquidistRow>,
}

impl EquidistReport {
    pub fn max_error(&self) -> f64 {
        self.rows.iter().map(|r| r.error).fold(0.0, f64::max)
    }
}

fn check_pq(p: u64, q: u64, n: u64) -> Result<()> {
    if p == 0 || q == 0 || p.gcd(&q) != 1 {
        return Err(Error::InvalidArgument(format!(
            "p = {p} and q = {q} must be positive and coprime"
        )));
    }
    if n <= p.max(q) {
        return Err(Error::InvalidArgument(format!(
            "n = {n} must exceed max(p, q) = {}",
            p.max(q)
        )));
    }
    Ok(())
}

/// `(pq/A_n)·Σ_{e(q/n, p/n)} f`, which tends to `∫_Ω f dm`.
pub fn excursion_average<F: PointFunction + ?Sized>(
    f: &F,
    p: u64,
    q: u64,
    n: u64,
) -> Result<Rational> {
    check_pq(p, q, n)?;
    let a_n = farey_length(n)?.a_n;
    let m = ModuliPoint::new(rat(q as i64, n as i64), rat(p as i64, n as i64))?;
    Ok(excursion_sum(f, &m)? * rat((p * q) as i64, a_n as i64))
}

pub fn equidistribution_check(
    f: &StepFunction,
    p: u64,
    q: u64,
    n_values: &[u64],
) -> Result<EquidistReport> {
    if n_values.is_empty() {
        return Err(Error::InvalidArgument("no orders given".into()));
    }
    let integral = f.integral();
    let exact = to_f64(&integral);
    let rows = n_values
        .iter()
        .map(|&n| {
            let value = excursion_average(f, p, q, n)?;
            let value_float = to_f64(&value);
            Ok(EquidistRow {
                n,
                a_n: farey_length(n)?.a_n,
                value: value.to_string(),
                value_float,
                error: (value_float - exact).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EquidistReport {
        p,
        q,
        function: f.to_string(),
        integral: integral.to_string(),
        integral_float: exact,
        rows,
    })
}
