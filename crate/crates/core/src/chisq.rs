//! Chi-square distribution function and quantiles via the regularized
//! lower incomplete gamma function.

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0` (Lanczos approximation).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

const MAX_ITER: usize = 10_000;
const REL_EPS: f64 = 1e-16;

/// Regularized lower incomplete gamma `P(a, x)` for `a > 0`, `x >= 0`.
pub fn regularized_gamma_p(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    let log_prefactor = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        // power series
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..MAX_ITER {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * REL_EPS {
                break;
            }
        }
        (sum.ln() + log_prefactor).exp().min(1.0)
    } else {
        // continued fraction for Q(a, x), modified Lentz
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < REL_EPS {
                break;
            }
        }
        let q = (h.ln() + log_prefactor).exp();
        (1.0 - q).max(0.0)
    }
}

fn check_df(df: u32) -> Result<f64> {
    if df == 0 {
        return Err(Error::InvalidArgument("degrees of freedom must be at least 1".into()));
    }
    Ok(f64::from(df))
}

/// Chi-square CDF with `df` degrees of freedom.
pub fn chi_square_cdf(x: f64, df: u32) -> Result<f64> {
    let k = check_df(df)?;
    if x.is_nan() || x < 0.0 {
        return Err(Error::InvalidArgument(format!("chi-square argument must be >= 0, got {x}")));
    }
    Ok(regularized_gamma_p(k / 2.0, x / 2.0))
}

fn chi_square_pdf(x: f64, k: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let half = k / 2.0;
    ((half - 1.0) * x.ln() - x / 2.0 - half * std::f64::consts::LN_2 - ln_gamma(half)).exp()
}

/// Target accuracy of [`chi_square_quantile`] on the CDF scale.
pub const QUANTILE_CDF_TOLERANCE: f64 = 1e-10;

/// Chi-square quantile: the `x` with `chi_square_cdf(x, df) == prob`.
///
/// Safeguarded Newton iteration inside a bisection bracket.
pub fn chi_square_quantile(prob: f64, df: u32) -> Result<f64> {
    let k = check_df(df)?;
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "quantile order must lie in (0, 1), got {prob}"
        )));
    }
    let cdf = |x: f64| regularized_gamma_p(k / 2.0, x / 2.0);

    let mut lo = 0.0_f64;
    let mut hi = k + 10.0 * (2.0 * k).sqrt() + 10.0;
    while cdf(hi) < prob {
        lo = hi;
        hi *= 2.0;
    }
    let mut x = k.max(lo).min(hi);
    for _ in 0..500 {
        let err = cdf(x) - prob;
        if err.abs() <= QUANTILE_CDF_TOLERANCE * 1e-3 {
            return Ok(x);
        }
        if err < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let density = chi_square_pdf(x, k);
        let newton = if density > 0.0 { x - err / density } else { f64::NAN };
        x = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Ok(x)
}
