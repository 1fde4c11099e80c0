//! Shared inputs for the benchmarks.

use bcz_core::exact::int;
use bcz_core::{denominator_stream, validate_gas, GasSeq, ModuliPoint};

/// The cyclic sequence of Farey denominators of order `n`, without the
/// repeated final 1.
pub fn farey_denominators(n: u64) -> GasSeq {
    let mut q: Vec<_> = denominator_stream(n)
        .expect("valid order")
        .map(|q| int(q as i64))
        .collect();
    q.pop();
    validate_gas(q, true).expect("Farey denominators form a cyclic GAS")
}

/// `(1/n, 1/n)`, whose excursion is a full period of the orbit of `(1/n, 1)`.
pub fn diagonal(n: i64) -> ModuliPoint {
    ModuliPoint::from_parts(1, n, 1, n).expect("valid moduli point")
}
