//! Probability vectors, sample sizes and observed count vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on the total mass of a [`ProbVector`].
pub const SUM_TOLERANCE: f64 = 1e-10;

/// A probability vector over `R >= 2` categories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::InvalidProbability(format!(
                "need at least 2 categories, got {}",
                entries.len()
            )));
        }
        if let Some(i) = entries.iter().position(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidProbability(format!(
                "entry {i} is {} (must be finite and nonnegative)",
                entries[i]
            )));
        }
        let total = compensated_sum(entries.iter().copied());
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidProbability(format!(
                "entries sum to {total}, not 1"
            )));
        }
        Ok(Self(entries))
    }

    /// Normalizes nonnegative weights into a probability vector.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if let Some(i) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidProbability(format!(
                "weight {i} is {} (must be finite and nonnegative)",
                weights[i]
            )));
        }
        let total = compensated_sum(weights.iter().copied());
        if total <= 0.0 {
            return Err(Error::InvalidProbability("weights sum to zero".into()));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    /// Uniform distribution over `categories` cells.
    pub fn uniform(categories: usize) -> Result<Self> {
        Self::new(vec![1.0 / categories as f64; categories])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Index of the first zero entry, if any.
    pub fn first_zero(&self) -> Option<usize> {
        self.0.iter().position(|p| *p == 0.0)
    }

    /// Fails with [`Error::StructuralZero`] if any entry is zero.
    pub fn require_positive(&self) -> Result<()> {
        match self.first_zero() {
            Some(index) => Err(Error::StructuralZero { index }),
            None => Ok(()),
        }
    }
}

impl TryFrom<Vec<f64>> for ProbVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ProbVector> for Vec<f64> {
    fn from(p: ProbVector) -> Self {
        p.0
    }
}

impl std::ops::Index<usize> for ProbVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Number of observations, always at least one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct SampleSize(u64);

impl SampleSize {
    pub fn new(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("sample size must be at least 1".into()));
        }
        Ok(Self(n))
    }

    pub fn get(self) -> u64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }
}

impl TryFrom<u64> for SampleSize {
    type Error = Error;

    fn try_from(n: u64) -> Result<Self> {
        Self::new(n)
    }
}

impl From<SampleSize> for u64 {
    fn from(n: SampleSize) -> Self {
        n.0
    }
}

/// Observed cell frequencies with the zero / nonzero partition of the cells.
///
/// Zero cells may sit anywhere; the partition is kept as index sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountVector {
    counts: Vec<u64>,
    total: u64,
    zeros: Vec<usize>,
    nonzeros: Vec<usize>,
}

impl CountVector {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 categories, got {}",
                counts.len()
            )));
        }
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::EmptyCounts);
        }
        let (zeros, nonzeros) = (0..counts.len()).partition(|&i| counts[i] == 0);
        Ok(Self {
            counts,
            total,
            zeros,
            nonzeros,
        })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Total number of observations `n`.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn sample_size(&self) -> SampleSize {
        SampleSize(self.total)
    }

    /// Number of categories `R`.
    pub fn categories(&self) -> usize {
        self.counts.len()
    }

    /// Number of zero cells `c`.
    pub fn zero_count(&self) -> usize {
        self.zeros.len()
    }

    pub fn zero_indices(&self) -> &[usize] {
        &self.zeros
    }

    pub fn nonzero_indices(&self) -> &[usize] {
        &self.nonzeros
    }

    /// Maximum likelihood estimate `counts / n`.
    pub fn mle(&self) -> ProbVector {
        let n = self.total as f64;
        // counts/n always sums to 1 up to rounding, far inside the tolerance
        ProbVector(self.counts.iter().map(|&k| k as f64 / n).collect())
    }
}

/// Neumaier-compensated summation.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut carry = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prob_vector_rejects_bad_input() {
        assert!(ProbVector::new(vec![1.0]).is_err());
        assert!(ProbVector::new(vec![0.5, 0.6]).is_err());
        assert!(ProbVector::new(vec![1.5, -0.5]).is_err());
        assert!(ProbVector::new(vec![f64::NAN, 1.0]).is_err());
        assert!(ProbVector::new(vec![0.25; 4]).is_ok());
    }

    #[test]
    fn from_weights_normalizes() {
        let p = ProbVector::from_weights(&[1.0, 3.0]).unwrap();
        assert_eq!(p.as_slice(), &[0.25, 0.75]);
        assert!(ProbVector::from_weights(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn count_vector_partition() {
        let x = CountVector::new(vec![0, 0, 3, 1]).unwrap();
        assert_eq!(x.total(), 4);
        assert_eq!(x.zero_count(), 2);
        assert_eq!(x.zero_indices(), &[0, 1]);
        assert_eq!(x.nonzero_indices(), &[2, 3]);
        assert_eq!(x.mle().as_slice(), &[0.0, 0.0, 0.75, 0.25]);
        assert_eq!(CountVector::new(vec![0, 0]), Err(Error::EmptyCounts));
    }

    #[test]
    fn sample_size_is_positive() {
        assert!(SampleSize::new(0).is_err());
        assert_eq!(SampleSize::new(7).unwrap().get(), 7);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1e16, 1.0, -1e16];
        assert_eq!(compensated_sum(v), 1.0);
    }
}
