//! Classical goodness-of-fit statistics of the power-divergence family.
//!
//! All statistics compare an `observed` probability vector against a `null`
//! vector with strictly positive entries, scaled by the sample size `n`.

use crate::error::{Error, Result};
use crate::prob::{compensated_sum, ProbVector, SampleSize};

/// The Read–Cressie recommended exponent.
pub const CRESSIE_READ_LAMBDA: f64 = 2.0 / 3.0;

fn check_pair(null: &ProbVector, observed: &ProbVector) -> Result<()> {
    if null.len() != observed.len() {
        return Err(Error::DimensionMismatch {
            expected: null.len(),
            actual: observed.len(),
        });
    }
    null.require_positive()
}

/// Pearson's chi-square `n * sum (o - p)^2 / p`.
pub fn pearson_q(null: &ProbVector, observed: &ProbVector, n: SampleSize) -> Result<f64> {
    check_pair(null, observed)?;
    let sum = compensated_sum(
        null.as_slice()
            .iter()
            .zip(observed.as_slice())
            .map(|(&p, &o)| (o - p) * (o - p) / p),
    );
    Ok(n.as_f64() * sum)
}

/// Kullback's minimum discrimination information statistic
/// `2n * sum o ln(o / p)`, with `0 ln 0 = 0`.
pub fn kullback_g(null: &ProbVector, observed: &ProbVector, n: SampleSize) -> Result<f64> {
    check_pair(null, observed)?;
    // o ln(o/p) - o + p is termwise nonnegative and sums to the same value
    let sum = compensated_sum(
        null.as_slice()
            .iter()
            .zip(observed.as_slice())
            .map(|(&p, &o)| {
                if o == 0.0 {
                    p
                } else {
                    o * (o / p).ln() - o + p
                }
            }),
    );
    Ok(2.0 * n.as_f64() * sum)
}

/// Power-divergence statistic `RC^lambda`.
///
/// `lambda == 0` is the continuous limit and is evaluated as [`kullback_g`].
/// `lambda == -1` is rejected. Zero observed cells contribute nothing for
/// `lambda > -1`; for `lambda < -1` they make the statistic infinite.
pub fn power_divergence(
    lambda: f64,
    null: &ProbVector,
    observed: &ProbVector,
    n: SampleSize,
) -> Result<f64> {
    if !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda must be finite, got {lambda}")));
    }
    if lambda == -1.0 {
        return Err(Error::InvalidLambda);
    }
    if lambda == 0.0 {
        return kullback_g(null, observed, n);
    }
    check_pair(null, observed)?;
    let scale = lambda * (lambda + 1.0);
    let mut terms = Vec::with_capacity(null.len());
    for (&p, &o) in null.as_slice().iter().zip(observed.as_slice()) {
        // o [(o/p)^lambda - 1] / (lambda (lambda + 1)) - (o - p) / (lambda + 1) >= 0
        let head = if o == 0.0 {
            if lambda > -1.0 {
                0.0
            } else {
                return Ok(f64::INFINITY);
            }
        } else {
            o * (lambda * (o / p).ln()).exp_m1()
        };
        terms.push(head / scale - (o - p) / (lambda + 1.0));
    }
    Ok(2.0 * n.as_f64() * compensated_sum(terms))
}

/// Ku's adjustment: `G` minus one per zero cell.
pub fn ku_corrected_g(
    null: &ProbVector,
    observed: &ProbVector,
    n: SampleSize,
    zero_cells: usize,
) -> Result<f64> {
    Ok(kullback_g(null, observed, n)? - zero_cells as f64)
}
