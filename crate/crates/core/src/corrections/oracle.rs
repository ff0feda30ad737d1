//! Brute-force check of the likelihood inequality: the observed count vector
//! must be at least as probable as every vector obtained by moving mass from
//! observed cells into empty ones.

use crate::error::{Error, Result};
use crate::prob::{CountVector, ProbVector};

pub const ORACLE_MAX_N: u64 = 12;
pub const ORACLE_MAX_CATEGORIES: usize = 5;

fn ln_factorial(k: u64) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// Multinomial log-probability up to the common `ln n!` term.
fn log_weight(x: &[u64], p: &[f64]) -> f64 {
    x.iter()
        .zip(p)
        .map(|(&k, &pr)| {
            if k == 0 {
                0.0
            } else {
                k as f64 * pr.ln() - ln_factorial(k)
            }
        })
        .sum()
}

/// Enumerates every alternative `x'` with `x'_j <= n_j` on observed cells,
/// any nonnegative value on empty cells and the same total, and checks that
/// none is strictly more probable than the observed vector under `p`.
pub fn likelihood_inequality_oracle(p: &ProbVector, counts: &CountVector) -> Result<bool> {
    if p.len() != counts.categories() {
        return Err(Error::DimensionMismatch {
            expected: counts.categories(),
            actual: p.len(),
        });
    }
    if counts.total() > ORACLE_MAX_N || counts.categories() > ORACLE_MAX_CATEGORIES {
        return Err(Error::TooLargeForEnumeration {
            n: counts.total(),
            categories: counts.categories(),
        });
    }
    if counts.zero_count() == 0 {
        return Ok(true);
    }
    let observed = log_weight(counts.counts(), p.as_slice());
    let tolerance = 1e-12 * observed.abs().max(1.0);
    let mut alt = vec![0u64; counts.categories()];
    Ok(enumerate(0, counts.total(), counts.counts(), &mut alt, &mut |x| {
        log_weight(x, p.as_slice()) <= observed + tolerance
    }))
}

/// Depth-first fill of `alt`; stops early once `check` fails.
fn enumerate(
    cell: usize,
    remaining: u64,
    counts: &[u64],
    alt: &mut [u64],
    check: &mut impl FnMut(&[u64]) -> bool,
) -> bool {
    let last = cell + 1 == counts.len();
    let cap = if counts[cell] == 0 { remaining } else { counts[cell].min(remaining) };
    if last {
        if remaining > cap {
            return true;
        }
        alt[cell] = remaining;
        return check(alt);
    }
    for v in 0..=cap {
        alt[cell] = v;
        if !enumerate(cell + 1, remaining - v, counts, alt, check) {
            return false;
        }
    }
    true
}
