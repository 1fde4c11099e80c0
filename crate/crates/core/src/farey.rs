//! Streaming Farey sequences.
//!
//! `F(n)` is generated with the neighbour recurrence, keeping only a two-term
//! window, so orders with tens of millions of terms cost O(1) memory.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported Farey order; denominators then fit comfortably in `i64`.
pub const MAX_ORDER: u64 = 1 << 31;

pub(crate) fn check_order(n: u64) -> Result<()> {
    if n == 0 || n > MAX_ORDER {
        return Err(Error::InvalidOrder {
            got: n,
            max: MAX_ORDER,
        });
    }
    Ok(())
}

/// The fraction `p/q` at position `index` of `F(n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FareyFraction {
    pub p: u64,
    pub q: u64,
    pub index: u64,
}

/// `A_n = |F(n)| − 1 = Σ_{k<=n} φ(k)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FareyLength {
    pub n: u64,
    pub a_n: u64,
}

/// Iterator over `F(n)` in increasing order, `0/1` through `1/1`.
#[derive(Clone, Debug)]
pub struct FareyStream {
    n: u64,
    cur: (u64, u64),
    next: (u64, u64),
    index: u64,
    done: bool,
}

impl Iterator for FareyStream {
    type Item = FareyFraction;

    #[inline]
    fn next(&mut self) -> Option<FareyFraction> {
        if self.done {
            return None;
        }
        let (p, q) = self.cur;
        let out = FareyFraction {
            p,
            q,
            index: self.index,
        };
        if p == 1 && q == 1 {
            self.done = true;
        } else {
            let (c, d) = self.next;
            let k = (self.n + q) / d;
            self.next = (k * c - p, k * d - q);
            self.cur = (c, d);
            self.index += 1;
        }
        Some(out)
    }
}

pub fn farey_stream(n: u64) -> Result<FareyStream> {
    check_order(n)?;
    Ok(FareyStream {
        n,
        cur: (0, 1),
        next: (1, n),
        index: 0,
        done: false,
    })
}

/// Euler's totient for `0..=n` by the standard sieve.
pub fn totients(n: u64) -> Vec<u32> {
    let n = n as usize;
    let mut phi: Vec<u32> = (0..=n as u32).collect();
    for i in 2..=n {
        if phi[i] == i as u32 {
            for j in (i..=n).step_by(i) {
                phi[j] -= phi[j] / i as u32;
            }
        }
    }
    phi
}

pub fn farey_length(n: u64) -> Result<FareyLength> {
    check_order(n)?;
    let a_n = totients(n).iter().skip(1).map(|&v| v as u64).sum();
    Ok(FareyLength { n, a_n })
}

/// Denominators `q_0 = 1, q_1 = n, …, q_{A_n} = 1` of `F(n)`.
#[derive(Clone, Debug)]
pub struct DenominatorStream(FareyStream);

impl Iterator for DenominatorStream {
    type Item = u64;

    #[inline]
    fn next(&mut self) -> Option<u64> {
        self.0.next().map(|f| f.q)
    }
}

pub fn denominator_stream(n: u64) -> Result<DenominatorStream> {
    farey_stream(n).map(DenominatorStream)
}
