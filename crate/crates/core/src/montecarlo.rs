//! Seeded Monte Carlo estimation of quantiles, type I risks and powers.
//!
//! Every replicate draws from its own ChaCha20 stream derived from
//! `(seed, replicate index)` alone, so results do not depend on how the
//! replicates are scheduled across threads.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chisq::chi_square_quantile;
use crate::corrections::{choose_ab, CorrectionConfig};
use crate::error::{Error, Result};
use crate::models::{evaluate_statistics, PerStatistic, Statistic};
use crate::prob::{CountVector, ProbVector, SampleSize};

/// Name of the generator and the stream derivation, echoed in outputs.
pub const RNG_ALGORITHM: &str =
    "ChaCha20 (rand_chacha 0.3): seed_from_u64(seed), set_stream(replicate index)";

/// Order of the per-zero-count quantiles.
pub const QUANTILE_ORDER: f64 = 0.95;

/// Mass of each rare cell in the built-in distributions.
const RARE_MASS: f64 = 0.0002;

/// The four 100-cell distributions with many rare cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BuiltinDistribution {
    F1,
    F2,
    F3,
    F4,
}

impl BuiltinDistribution {
    pub const ALL: [BuiltinDistribution; 4] = [Self::F1, Self::F2, Self::F3, Self::F4];

    pub fn name(&self) -> &'static str {
        match self {
            Self::F1 => "f1",
            Self::F2 => "f2",
            Self::F3 => "f3",
            Self::F4 => "f4",
        }
    }

    /// Number of leading rare cells.
    pub fn rare_cells(&self) -> usize {
        match self {
            Self::F1 => 20,
            Self::F2 => 50,
            Self::F3 => 70,
            Self::F4 => 90,
        }
    }

    fn common_mass(&self) -> f64 {
        match self {
            Self::F1 => 0.01245,
            Self::F2 => 0.0198,
            // 0.986 / 30, printed as 0.03286667 in the usual tables
            Self::F3 => 0.986 / 30.0,
            Self::F4 => 0.0982,
        }
    }

    pub fn probabilities(&self) -> ProbVector {
        let rare = self.rare_cells();
        let mut v = vec![RARE_MASS; rare];
        v.resize(100, self.common_mass());
        ProbVector::new(v).expect("built-in distribution sums to one")
    }
}

impl std::str::FromStr for BuiltinDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::UnknownDistribution(s.to_owned()))
    }
}

pub fn builtin_distribution(name: &str) -> Result<ProbVector> {
    Ok(name.parse::<BuiltinDistribution>()?.probabilities())
}

const SHIFT: f64 = 1.0 / 300.0;

/// Moves `1/300` of mass from each of cells 91..=100 to each of cells 1..=10.
pub fn perturb_distribution(f: &ProbVector) -> Result<ProbVector> {
    if f.len() != 100 {
        return Err(Error::DimensionMismatch {
            expected: 100,
            actual: f.len(),
        });
    }
    let mut v = f.as_slice().to_vec();
    for (i, p) in v.iter_mut().enumerate() {
        if i < 10 {
            *p += SHIFT;
        } else if i >= 90 {
            if *p <= SHIFT {
                return Err(Error::InvalidProbability(format!(
                    "cell {} has mass {p} <= 1/300 and cannot be perturbed",
                    i + 1
                )));
            }
            *p -= SHIFT;
        }
    }
    ProbVector::new(v)
}

/// Inverse-CDF categorical sampler over a fixed probability vector.
#[derive(Debug, Clone)]
pub struct MultinomialSampler {
    cumulative: Vec<f64>,
    last_positive: usize,
}

impl MultinomialSampler {
    pub fn new(p: &ProbVector) -> Self {
        let mut acc = 0.0;
        let cumulative = p
            .as_slice()
            .iter()
            .map(|&v| {
                acc += v;
                acc
            })
            .collect();
        let last_positive = p
            .as_slice()
            .iter()
            .rposition(|&v| v > 0.0)
            .expect("probability vector has positive mass");
        Self {
            cumulative,
            last_positive,
        }
    }

    pub fn categories(&self) -> usize {
        self.cumulative.len()
    }

    /// One categorical draw; zero-probability cells are never returned.
    pub fn draw(&self, rng: &mut impl Rng) -> usize {
        let total = self.cumulative[self.cumulative.len() - 1];
        let u = rng.gen::<f64>() * total;
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.last_positive)
    }

    pub fn sample(&self, n: SampleSize, rng: &mut impl Rng) -> CountVector {
        let mut counts = vec![0u64; self.categories()];
        for _ in 0..n.get() {
            counts[self.draw(rng)] += 1;
        }
        CountVector::new(counts).expect("n >= 1 draws")
    }
}

/// Draws a count vector from `M(n, p)`.
pub fn sample_multinomial(p: &ProbVector, n: SampleSize, rng: &mut impl Rng) -> CountVector {
    MultinomialSampler::new(p).sample(n, rng)
}

/// Generator for one replicate of a run seeded with `seed`.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// Type-1 empirical quantile: the order statistic of rank `ceil(order * k)`.
///
/// Returns `None` for an empty sample.
pub fn empirical_quantile(values: &[f64], order: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    // the offset absorbs representation error in order * k, e.g. 0.95 * 20
    let rank = ((order * sorted.len() as f64) - 1e-9).ceil().max(1.0) as usize;
    Some(sorted[rank.min(sorted.len()) - 1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    /// Distribution the counts are drawn from.
    pub sampling: ProbVector,
    /// Fully specified null the statistics are computed against.
    pub null: ProbVector,
    pub n: SampleSize,
    pub replicates: usize,
    pub alphas: Vec<f64>,
    pub seed: u64,
    pub config: CorrectionConfig,
}

impl SimulationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sampling.len() != self.null.len() {
            return Err(Error::DimensionMismatch {
                expected: self.null.len(),
                actual: self.sampling.len(),
            });
        }
        self.null.require_positive()?;
        if self.replicates == 0 {
            return Err(Error::InvalidArgument("replicates must be at least 1".into()));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {a}")));
        }
        Ok(())
    }

    pub fn df(&self) -> u32 {
        (self.null.len() - 1) as u32
    }
}

/// Outcome of one replicate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub zero_cells: usize,
    pub statistics: PerStatistic<f64>,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroCountBucket {
    pub zero_cells: usize,
    pub count: usize,
    pub quantiles: PerStatistic<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionRates {
    pub alpha: f64,
    pub threshold: f64,
    pub rates: PerStatistic<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub seed: u64,
    pub rng: String,
    pub n: u64,
    pub categories: usize,
    pub df: u32,
    pub replicates: usize,
    pub quantile_order: f64,
    /// Buckets in increasing zero count.
    pub per_c: Vec<ZeroCountBucket>,
    pub rejection_rates: Vec<RejectionRates>,
    pub mode_c: usize,
    pub fallback_count: usize,
}

impl SimulationSummary {
    pub fn bucket(&self, zero_cells: usize) -> Option<&ZeroCountBucket> {
        self.per_c.iter().find(|b| b.zero_cells == zero_cells)
    }

    pub fn rates_at(&self, alpha: f64) -> Option<&PerStatistic<f64>> {
        self.rejection_rates
            .iter()
            .find(|r| (r.alpha - alpha).abs() < 1e-12)
            .map(|r| &r.rates)
    }

    /// `c,bucket_count,q_Q,q_Qab,q_G,q_Gab,q_RC23`
    pub fn quantiles_csv(&self) -> String {
        let mut out = String::from("c,bucket_count,q_Q,q_Qab,q_G,q_Gab,q_RC23\n");
        for b in &self.per_c {
            let q = &b.quantiles;
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                b.zero_cells, b.count, q.q, q.q_ab, q.g, q.g_ab, q.rc23
            ));
        }
        out
    }

    /// `alpha,threshold,Q,Qab,G,Gab,RC23`
    pub fn rates_csv(&self) -> String {
        let mut out = String::from("alpha,threshold,Q,Qab,G,Gab,RC23\n");
        for r in &self.rejection_rates {
            let v = &r.rates;
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.alpha, r.threshold, v.q, v.q_ab, v.g, v.g_ab, v.rc23
            ));
        }
        out
    }
}

fn run_replicate(
    spec: &SimulationSpec,
    sampler: &MultinomialSampler,
    index: usize,
) -> Result<ReplicateRecord> {
    let mut rng = replicate_rng(spec.seed, index as u64);
    let counts = sampler.sample(spec.n, &mut rng);
    let params = choose_ab(&counts, &spec.config);
    Ok(ReplicateRecord {
        zero_cells: counts.zero_count(),
        statistics: evaluate_statistics(&spec.null, &counts, &params)?,
        fallback: params.fallback && counts.zero_count() > 0,
    })
}

/// Per-replicate records in replicate order.
pub fn simulate_replicates(spec: &SimulationSpec) -> Result<Vec<ReplicateRecord>> {
    spec.validate()?;
    let sampler = MultinomialSampler::new(&spec.sampling);
    (0..spec.replicates)
        .into_par_iter()
        .map(|i| run_replicate(spec, &sampler, i))
        .collect()
}

pub fn summarize(spec: &SimulationSpec, records: &[ReplicateRecord]) -> Result<SimulationSummary> {
    let df = spec.df();
    let mut by_c: BTreeMap<usize, Vec<&ReplicateRecord>> = BTreeMap::new();
    for r in records {
        by_c.entry(r.zero_cells).or_default().push(r);
    }
    let column = |rs: &[&ReplicateRecord], s: Statistic| -> Vec<f64> {
        rs.iter().map(|r| r.statistics.get(s)).collect()
    };
    let per_c = by_c
        .iter()
        .map(|(&zero_cells, rs)| {
            let q = |s| empirical_quantile(&column(rs, s), QUANTILE_ORDER).expect("bucket is nonempty");
            ZeroCountBucket {
                zero_cells,
                count: rs.len(),
                quantiles: PerStatistic {
                    q: q(Statistic::Q),
                    q_ab: q(Statistic::Qab),
                    g: q(Statistic::G),
                    g_ab: q(Statistic::Gab),
                    rc23: q(Statistic::Rc23),
                    g_ku: q(Statistic::GKu),
                },
            }
        })
        .collect();
    let total = records.len() as f64;
    let rejection_rates = spec
        .alphas
        .iter()
        .map(|&alpha| {
            let threshold = chi_square_quantile(1.0 - alpha, df)?;
            let rate = |s: Statistic| {
                records.iter().filter(|r| r.statistics.get(s) > threshold).count() as f64 / total
            };
            Ok(RejectionRates {
                alpha,
                threshold,
                rates: PerStatistic {
                    q: rate(Statistic::Q),
                    q_ab: rate(Statistic::Qab),
                    g: rate(Statistic::G),
                    g_ab: rate(Statistic::Gab),
                    rc23: rate(Statistic::Rc23),
                    g_ku: rate(Statistic::GKu),
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    // ties resolve to the smallest zero count
    let mode_c = by_c
        .iter()
        .rev()
        .max_by_key(|(_, rs)| rs.len())
        .map_or(0, |(&c, _)| c);
    Ok(SimulationSummary {
        seed: spec.seed,
        rng: RNG_ALGORITHM.to_owned(),
        n: spec.n.get(),
        categories: spec.null.len(),
        df,
        replicates: records.len(),
        quantile_order: QUANTILE_ORDER,
        per_c,
        rejection_rates,
        mode_c,
        fallback_count: records.iter().filter(|r| r.fallback).count(),
    })
}

pub fn run_simulation(spec: &SimulationSpec) -> Result<SimulationSummary> {
    let records = simulate_replicates(spec)?;
    summarize(spec, &records)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayPoint {
    pub n: u64,
    /// Empirical probability of at least one empty cell.
    pub probability: f64,
    pub standard_error: f64,
}

/// Empirical `P(C_n >= 1)` over a grid of sample sizes.
pub fn zero_count_decay(
    p: &ProbVector,
    n_grid: &[SampleSize],
    replicates: usize,
    seed: u64,
) -> Result<Vec<DecayPoint>> {
    p.require_positive()?;
    if replicates == 0 {
        return Err(Error::InvalidArgument("replicates must be at least 1".into()));
    }
    let sampler = MultinomialSampler::new(p);
    Ok(n_grid
        .iter()
        .enumerate()
        .map(|(g, &n)| {
            let grid_seed = seed.wrapping_add((g as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let hits = (0..replicates)
                .into_par_iter()
                .filter(|&i| {
                    let mut rng = replicate_rng(grid_seed, i as u64);
                    sampler.sample(n, &mut rng).zero_count() > 0
                })
                .count();
            let prob = hits as f64 / replicates as f64;
            DecayPoint {
                n: n.get(),
                probability: prob,
                standard_error: (prob * (1.0 - prob) / replicates as f64).sqrt(),
            }
        })
        .collect())
}
