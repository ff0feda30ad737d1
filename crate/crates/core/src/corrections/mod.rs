//! Zero-cell corrections for Pearson's and Kullback's statistics.
//!
//! The corrected estimator puts mass `a` on every zero cell and deflates the
//! nonzero cells through an exponent `b`:
//!
//! ```text
//! p_i = a                                   (zero cells)
//! p_j = n_j / n^b - (a c + n^(1-b) - 1) / (R - c)   (nonzero cells)
//! ```
//!
//! The shift on the nonzero cells is never stored; it is always recomputed
//! from `(a, b, c, R, n)` so the estimator sums to one by construction.
//! `(a, b)` are drawn from an admissible region that keeps every entry in
//! `(0, 1)` and makes each zero cell at most `1/n` times as likely as any
//! observed cell.

mod oracle;

pub use oracle::{likelihood_inequality_oracle, ORACLE_MAX_CATEGORIES, ORACLE_MAX_N};

use serde::{Deserialize, Serialize};

use crate::divergence::{kullback_g, pearson_q};
use crate::error::{Error, Result};
use crate::prob::{compensated_sum, CountVector, ProbVector};

/// Default convex weight of `b_max = 1` when choosing `b`.
pub const DEFAULT_H: f64 = 0.1;
/// Default fraction of the admissible `a` interval kept between `a` and `a_max`.
pub const DEFAULT_EPS_FRACTION: f64 = 1e-3;

/// Summary of the nonzero cells of a count vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparsityStats {
    /// Smallest nonzero count.
    pub n_lo: u64,
    /// Largest nonzero count.
    pub n_hi: u64,
    /// `n - n_lo (R - c)`.
    pub n_lolo: u64,
    /// `n_hi (R - c) - n`.
    pub n_hihi: u64,
    /// All nonzero counts are equal.
    pub uniform: bool,
}

pub fn sparsity_stats(counts: &CountVector) -> SparsityStats {
    let nonzero = counts.nonzero_indices();
    let values = nonzero.iter().map(|&j| counts.counts()[j]);
    let n_lo = values.clone().min().expect("count vector has a nonzero cell");
    let n_hi = values.max().expect("count vector has a nonzero cell");
    let k = nonzero.len() as u64;
    let n = counts.total();
    SparsityStats {
        n_lo,
        n_hi,
        n_lolo: n - n_lo * k,
        n_hihi: n_hi * k - n,
        uniform: n_lo == n_hi,
    }
}

/// Admissible interval for the exponent: `(b_min, b_max)` with `b_max = 1`.
pub fn b_bounds(counts: &CountVector, stats: &SparsityStats) -> Result<(f64, f64)> {
    if counts.zero_count() == 0 {
        return Err(Error::InvalidArgument("exponent bounds need at least one zero cell".into()));
    }
    if stats.uniform {
        return Err(Error::UniformCounts);
    }
    let n = counts.total();
    if n < 2 {
        return Err(Error::SampleTooSmall(n));
    }
    let ln_n = (n as f64).ln();
    let r = counts.categories() as f64;
    let b_min = [
        (stats.n_hihi as f64 / (r - 1.0)).ln() / ln_n,
        (stats.n_lolo as f64).ln() / ln_n,
        ((stats.n_hi - stats.n_lo) as f64).ln() / ln_n,
    ]
    .into_iter()
    .fold(0.0_f64, f64::max);
    Ok((b_min, 1.0))
}

/// Open interval `(min, max)` of admissible zero-cell masses for a given `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AInterval {
    pub min: f64,
    pub max: f64,
}

impl AInterval {
    // NaN bounds count as empty.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn is_empty(&self) -> bool {
        !(self.min < self.max)
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }

    pub fn contains(&self, a: f64) -> bool {
        self.min < a && a < self.max
    }
}

/// Bounds `a_min(b)` and `a_max(b)`. An empty interval is returned as is.
///
/// `a > a_min(b)` keeps the largest nonzero cell below one; `a < a_max(b)`
/// keeps the smallest nonzero cell positive and enforces `a <= p_j / n`.
pub fn a_bounds(b: f64, counts: &CountVector, stats: &SparsityStats) -> Result<AInterval> {
    let c = counts.zero_count() as f64;
    if c == 0.0 {
        return Err(Error::InvalidArgument("mass bounds need at least one zero cell".into()));
    }
    let n = counts.total() as f64;
    let k = counts.categories() as f64 - c;
    let nb = (b * n.ln()).exp();
    let n_lolo = stats.n_lolo as f64;
    // largest corrected entry stays below one
    let min = ((stats.n_hi as f64 - nb) * k + nb - n) / (c * nb);
    let max = [
        (nb - n_lolo) / (c * nb),
        (nb - n_lolo) / (nb * (n * k + c)),
    ]
    .into_iter()
    .fold(1.0_f64, f64::min);
    Ok(AInterval {
        min: min.max(0.0),
        max,
    })
}

/// How far below `a_max(b)` the zero-cell mass is placed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EpsPolicy {
    /// `eps = fraction * (a_max - a_min)`.
    Relative { fraction: f64 },
}

impl EpsPolicy {
    pub fn relative(fraction: f64) -> Result<Self> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "relative eps fraction must lie in (0, 1), got {fraction}"
            )));
        }
        Ok(Self::Relative { fraction })
    }

    pub fn offset(&self, interval: &AInterval) -> f64 {
        match *self {
            Self::Relative { fraction } => fraction * interval.width(),
        }
    }
}

impl Default for EpsPolicy {
    fn default() -> Self {
        Self::Relative {
            fraction: DEFAULT_EPS_FRACTION,
        }
    }
}

/// User-facing knobs of the `(a, b)` selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConfig")]
pub struct CorrectionConfig {
    h: f64,
    eps: EpsPolicy,
}

#[derive(Deserialize)]
struct RawConfig {
    h: f64,
    eps: EpsPolicy,
}

impl TryFrom<RawConfig> for CorrectionConfig {
    type Error = Error;

    fn try_from(raw: RawConfig) -> Result<Self> {
        Self::new(raw.h, raw.eps)
    }
}

impl CorrectionConfig {
    pub fn new(h: f64, eps: EpsPolicy) -> Result<Self> {
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::InvalidArgument(format!("h must lie in (0, 1), got {h}")));
        }
        let EpsPolicy::Relative { fraction } = eps;
        EpsPolicy::relative(fraction)?;
        Ok(Self { h, eps })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn eps(&self) -> EpsPolicy {
        self.eps
    }
}

impl Default for CorrectionConfig {
    fn default() -> Self {
        Self {
            h: DEFAULT_H,
            eps: EpsPolicy::default(),
        }
    }
}

/// Why the correction collapsed to the uncorrected statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FallbackReason {
    /// No zero cell: the estimator is the MLE.
    NoZeros,
    /// Nonzero counts all equal.
    UniformCounts,
    /// `a_min(b) >= a_max(b)` for the selected `b`.
    EmptyInterval,
    /// The chosen `(a, b)` failed the post-hoc estimator checks.
    InvalidEstimate,
}

impl FallbackReason {
    /// `NoZeros` is the ordinary case; the others deserve a warning.
    pub fn warning(&self) -> Option<&'static str> {
        match self {
            Self::NoZeros => None,
            Self::UniformCounts => {
                Some("nonzero counts are uniform; corrected statistics equal the uncorrected ones")
            }
            Self::EmptyInterval => Some(
                "admissible interval for the zero-cell mass is empty; corrected statistics equal the uncorrected ones",
            ),
            Self::InvalidEstimate => Some(
                "selected correction produced an invalid estimator; corrected statistics equal the uncorrected ones",
            ),
        }
    }
}

/// Parameters of the corrected estimator together with the bounds they
/// were drawn from. Bounds that were never computed are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectionParams {
    pub a: f64,
    pub b: f64,
    pub h: Option<f64>,
    pub eps: Option<f64>,
    pub b_min: Option<f64>,
    pub b_max: f64,
    pub a_min: Option<f64>,
    pub a_max: Option<f64>,
    pub fallback: bool,
    pub fallback_reason: Option<FallbackReason>,
    total: u64,
    categories: usize,
    zero_cells: usize,
}

impl CorrectionParams {
    /// Identity parameters `(a, b) = (0, 1)`.
    pub fn fallback(counts: &CountVector, reason: FallbackReason) -> Self {
        Self {
            a: 0.0,
            b: 1.0,
            h: None,
            eps: None,
            b_min: None,
            b_max: 1.0,
            a_min: None,
            a_max: None,
            fallback: true,
            fallback_reason: Some(reason),
            total: counts.total(),
            categories: counts.categories(),
            zero_cells: counts.zero_count(),
        }
    }

    /// Explicit `(a, b)`, checked against the admissible region.
    pub fn with_ab(counts: &CountVector, a: f64, b: f64) -> Result<Self> {
        let stats = sparsity_stats(counts);
        let (b_min, b_max) = b_bounds(counts, &stats)?;
        if !(b_min < b && b < b_max) {
            return Err(Error::InvalidArgument(format!(
                "b = {b} outside ({b_min}, {b_max})"
            )));
        }
        let interval = a_bounds(b, counts, &stats)?;
        if !interval.contains(a) {
            return Err(Error::InvalidArgument(format!(
                "a = {a} outside ({}, {})",
                interval.min, interval.max
            )));
        }
        Ok(Self {
            a,
            b,
            h: None,
            eps: None,
            b_min: Some(b_min),
            b_max,
            a_min: Some(interval.min),
            a_max: Some(interval.max),
            fallback: false,
            fallback_reason: None,
            total: counts.total(),
            categories: counts.categories(),
            zero_cells: counts.zero_count(),
        })
    }

    fn check_matches(&self, counts: &CountVector) -> Result<()> {
        if self.total != counts.total()
            || self.categories != counts.categories()
            || self.zero_cells != counts.zero_count()
        {
            return Err(Error::InconsistentParams(format!(
                "built for n = {}, R = {}, c = {}; got n = {}, R = {}, c = {}",
                self.total,
                self.categories,
                self.zero_cells,
                counts.total(),
                counts.categories(),
                counts.zero_count()
            )));
        }
        Ok(())
    }
}

/// Selects `(a, b)`: `b = h + (1 - h) b_min`, `a = a_max(b) - eps`.
///
/// Degenerate inputs produce fallback parameters instead of an error.
pub fn choose_ab(counts: &CountVector, config: &CorrectionConfig) -> CorrectionParams {
    let with_h = |mut p: CorrectionParams| {
        p.h = Some(config.h);
        p
    };
    if counts.zero_count() == 0 {
        return with_h(CorrectionParams::fallback(counts, FallbackReason::NoZeros));
    }
    let stats = sparsity_stats(counts);
    if stats.uniform {
        return with_h(CorrectionParams::fallback(counts, FallbackReason::UniformCounts));
    }
    let (b_min, b_max) = match b_bounds(counts, &stats) {
        Ok(bounds) => bounds,
        Err(_) => return with_h(CorrectionParams::fallback(counts, FallbackReason::UniformCounts)),
    };
    let b = config.h * b_max + (1.0 - config.h) * b_min;
    let interval = match a_bounds(b, counts, &stats) {
        Ok(interval) => interval,
        Err(_) => return with_h(CorrectionParams::fallback(counts, FallbackReason::EmptyInterval)),
    };
    if interval.is_empty() {
        let mut p = with_h(CorrectionParams::fallback(counts, FallbackReason::EmptyInterval));
        p.b_min = Some(b_min);
        p.a_min = Some(interval.min);
        p.a_max = Some(interval.max);
        return p;
    }
    let eps = config.eps.offset(&interval);
    let params = CorrectionParams {
        a: interval.max - eps,
        b,
        h: Some(config.h),
        eps: Some(eps),
        b_min: Some(b_min),
        b_max,
        a_min: Some(interval.min),
        a_max: Some(interval.max),
        fallback: false,
        fallback_reason: None,
        total: counts.total(),
        categories: counts.categories(),
        zero_cells: counts.zero_count(),
    };
    match corrected_estimator(counts, &params) {
        Ok(p) if p.as_slice().iter().all(|&v| v > 0.0 && v < 1.0) && cond2_check(&p, counts) => {
            params
        }
        _ => {
            let mut p = with_h(CorrectionParams::fallback(counts, FallbackReason::InvalidEstimate));
            p.b_min = Some(b_min);
            p.a_min = Some(interval.min);
            p.a_max = Some(interval.max);
            p
        }
    }
}

/// Raw estimator entries for arbitrary `(a, b)`, without any validation.
pub fn estimator_entries(counts: &CountVector, a: f64, b: f64) -> Vec<f64> {
    let n = counts.total() as f64;
    let c = counts.zero_count() as f64;
    let k = counts.categories() as f64 - c;
    let nb = (b * n.ln()).exp();
    let shift = (a * c + n / nb - 1.0) / k;
    counts
        .counts()
        .iter()
        .map(|&nj| if nj == 0 { a } else { nj as f64 / nb - shift })
        .collect()
}

/// The corrected estimator; the MLE itself for fallback parameters.
pub fn corrected_estimator(counts: &CountVector, params: &CorrectionParams) -> Result<ProbVector> {
    params.check_matches(counts)?;
    if params.fallback {
        return Ok(counts.mle());
    }
    let entries = estimator_entries(counts, params.a, params.b);
    if let Some(index) = entries.iter().position(|&v| v <= 0.0) {
        return Err(Error::NonPositiveEstimate { index });
    }
    ProbVector::new(entries)
}

/// True iff every zero cell has `p_i <= p_j / n` against every nonzero cell `j`.
///
/// # Panics
///
/// If `p` and `counts` have different lengths.
pub fn cond2_check(p: &ProbVector, counts: &CountVector) -> bool {
    assert_eq!(p.len(), counts.categories(), "probability and count lengths differ");
    let n = counts.total() as f64;
    let Some(max_zero) = counts
        .zero_indices()
        .iter()
        .map(|&i| p[i])
        .reduce(f64::max)
    else {
        return true;
    };
    let min_nonzero = counts
        .nonzero_indices()
        .iter()
        .map(|&j| p[j])
        .fold(f64::INFINITY, f64::min);
    max_zero <= min_nonzero / n
}

struct ClosedFormTerms {
    n: f64,
    /// `n^(1-b)`
    inflation: f64,
    /// `(a c + n^(1-b) - 1) / (R - c)`
    shift: f64,
}

impl ClosedFormTerms {
    fn new(counts: &CountVector, params: &CorrectionParams) -> Self {
        let n = counts.total() as f64;
        let nb = (params.b * n.ln()).exp();
        let inflation = n / nb;
        let c = counts.zero_count() as f64;
        let k = counts.categories() as f64 - c;
        Self {
            n,
            inflation,
            shift: (params.a * c + inflation - 1.0) / k,
        }
    }
}

fn check_null(null: &ProbVector, counts: &CountVector) -> Result<()> {
    if null.len() != counts.categories() {
        return Err(Error::DimensionMismatch {
            expected: counts.categories(),
            actual: null.len(),
        });
    }
    null.require_positive()
}

/// Corrected Pearson statistic `Q^ab = n^(2(1-b)) Q - f(a, b)`.
pub fn corrected_q(null: &ProbVector, counts: &CountVector, params: &CorrectionParams) -> Result<f64> {
    check_null(null, counts)?;
    params.check_matches(counts)?;
    let n = counts.sample_size();
    let q = pearson_q(null, &counts.mle(), n)?;
    if params.fallback {
        return Ok(q);
    }
    let t = ClosedFormTerms::new(counts, params);
    let x = counts.counts();
    let p0 = null.as_slice();
    let weighted = compensated_sum(
        counts
            .nonzero_indices()
            .iter()
            .map(|&j| x[j] as f64 / (t.n * p0[j])),
    );
    let inv_zero = compensated_sum(counts.zero_indices().iter().map(|&i| 1.0 / p0[i]));
    let inv_nonzero = compensated_sum(counts.nonzero_indices().iter().map(|&j| 1.0 / p0[j]));
    let sq = t.inflation * t.inflation;
    let f = t.n
        * compensated_sum([
            1.0,
            -sq,
            2.0 * t.inflation * t.shift * weighted,
            -params.a * params.a * inv_zero,
            -t.shift * t.shift * inv_nonzero,
        ]);
    Ok(compensated_sum([sq * q, -f]))
}

/// Corrected Kullback statistic `G^ab = n^(1-b) G - g(a, b)`.
pub fn corrected_g(null: &ProbVector, counts: &CountVector, params: &CorrectionParams) -> Result<f64> {
    check_null(null, counts)?;
    params.check_matches(counts)?;
    let n = counts.sample_size();
    let g = kullback_g(null, &counts.mle(), n)?;
    if params.fallback {
        return Ok(g);
    }
    let t = ClosedFormTerms::new(counts, params);
    let x = counts.counts();
    let p0 = null.as_slice();
    let mut log_ratio = Vec::with_capacity(counts.nonzero_indices().len());
    let mut log_deflation = Vec::with_capacity(counts.nonzero_indices().len());
    for &j in counts.nonzero_indices() {
        let nj = x[j] as f64;
        let corrected = nj / t.n * t.inflation - t.shift;
        if corrected <= 0.0 {
            return Err(Error::NonPositiveEstimate { index: j });
        }
        log_ratio.push((corrected / p0[j]).ln());
        log_deflation.push(nj / t.n * (corrected * t.n / nj).ln());
    }
    let zero_part = compensated_sum(
        counts
            .zero_indices()
            .iter()
            .map(|&i| (params.a / p0[i]).ln()),
    );
    let inner = compensated_sum([
        t.shift * compensated_sum(log_ratio),
        -params.a * zero_part,
        -t.inflation * compensated_sum(log_deflation),
    ]);
    Ok(compensated_sum([t.inflation * g, -2.0 * t.n * inner]))
}
