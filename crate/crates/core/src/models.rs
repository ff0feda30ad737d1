//! Null-hypothesis models and the end-to-end test driver.

use serde::{Deserialize, Serialize};

use crate::chisq::chi_square_quantile;
use crate::corrections::{choose_ab, corrected_g, corrected_q, CorrectionConfig, CorrectionParams};
use crate::divergence::{kullback_g, ku_corrected_g, pearson_q, power_divergence, CRESSIE_READ_LAMBDA};
use crate::error::{Error, Result};
use crate::prob::{CountVector, ProbVector};
use crate::tables::{remove_empty_margins, ContingencyTable, RemovalLog};

/// A null hypothesis for a multinomial vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NullModel {
    /// Fully specified probabilities; no estimated parameter.
    Simple { p0: ProbVector },
    /// Independence of the two margins of an `rows x cols` table whose
    /// cells are flattened row-major.
    Independence { rows: usize, cols: usize },
}

impl NullModel {
    pub fn simple(p0: ProbVector) -> Result<Self> {
        p0.require_positive()?;
        Ok(Self::Simple { p0 })
    }

    pub fn independence(rows: usize, cols: usize) -> Result<Self> {
        if rows < 2 || cols < 2 {
            return Err(Error::InvalidArgument(format!(
                "independence needs at least a 2x2 table, got {rows}x{cols}"
            )));
        }
        Ok(Self::Independence { rows, cols })
    }

    pub fn categories(&self) -> usize {
        match self {
            Self::Simple { p0 } => p0.len(),
            Self::Independence { rows, cols } => rows * cols,
        }
    }

    /// Number of free parameters estimated under the null, `s`.
    pub fn parameter_count(&self) -> usize {
        match self {
            Self::Simple { .. } => 0,
            Self::Independence { rows, cols } => (rows - 1) + (cols - 1),
        }
    }

    /// `R - s - 1`.
    pub fn df(&self) -> u32 {
        (self.categories() - self.parameter_count() - 1) as u32
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedNull {
    pub p_star0: ProbVector,
    pub df: u32,
}

/// Maximum likelihood fit of the null; the product of the empirical
/// margins for independence.
pub fn fit_null(model: &NullModel, counts: &CountVector) -> Result<FittedNull> {
    if model.categories() != counts.categories() {
        return Err(Error::DimensionMismatch {
            expected: model.categories(),
            actual: counts.categories(),
        });
    }
    let p_star0 = match model {
        NullModel::Simple { p0 } => {
            p0.require_positive()?;
            p0.clone()
        }
        &NullModel::Independence { rows, cols } => {
            let x = counts.counts();
            let n = counts.total() as f64;
            let row: Vec<f64> = (0..rows)
                .map(|i| x[i * cols..(i + 1) * cols].iter().sum::<u64>() as f64 / n)
                .collect();
            let col: Vec<f64> = (0..cols)
                .map(|j| (0..rows).map(|i| x[i * cols + j]).sum::<u64>() as f64 / n)
                .collect();
            if let Some(index) = row.iter().position(|&v| v == 0.0) {
                return Err(Error::EmptyMargin { axis: "row", index });
            }
            if let Some(index) = col.iter().position(|&v| v == 0.0) {
                return Err(Error::EmptyMargin { axis: "column", index });
            }
            ProbVector::new(row.iter().flat_map(|r| col.iter().map(move |c| r * c)).collect())?
        }
    };
    Ok(FittedNull {
        p_star0,
        df: model.df(),
    })
}

/// The statistics reported by [`run_test`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Statistic {
    #[serde(rename = "Q")]
    Q,
    #[serde(rename = "Qab")]
    Qab,
    #[serde(rename = "G")]
    G,
    #[serde(rename = "Gab")]
    Gab,
    #[serde(rename = "RC23")]
    Rc23,
    #[serde(rename = "G_Ku")]
    GKu,
}

impl Statistic {
    pub const ALL: [Statistic; 6] = [
        Statistic::Q,
        Statistic::Qab,
        Statistic::G,
        Statistic::Gab,
        Statistic::Rc23,
        Statistic::GKu,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Self::Q => "Q",
            Self::Qab => "Qab",
            Self::G => "G",
            Self::Gab => "Gab",
            Self::Rc23 => "RC23",
            Self::GKu => "G_Ku",
        }
    }
}

/// One value per [`Statistic`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerStatistic<T> {
    #[serde(rename = "Q")]
    pub q: T,
    #[serde(rename = "Qab")]
    pub q_ab: T,
    #[serde(rename = "G")]
    pub g: T,
    #[serde(rename = "Gab")]
    pub g_ab: T,
    #[serde(rename = "RC23")]
    pub rc23: T,
    #[serde(rename = "G_Ku")]
    pub g_ku: T,
}

impl<T: Copy> PerStatistic<T> {
    pub fn get(&self, s: Statistic) -> T {
        match s {
            Statistic::Q => self.q,
            Statistic::Qab => self.q_ab,
            Statistic::G => self.g,
            Statistic::Gab => self.g_ab,
            Statistic::Rc23 => self.rc23,
            Statistic::GKu => self.g_ku,
        }
    }

    pub fn map<U>(&self, f: impl Fn(T) -> U) -> PerStatistic<U> {
        PerStatistic {
            q: f(self.q),
            q_ab: f(self.q_ab),
            g: f(self.g),
            g_ab: f(self.g_ab),
            rc23: f(self.rc23),
            g_ku: f(self.g_ku),
        }
    }
}

/// Computes all six statistics of a count vector against a fitted null.
pub fn evaluate_statistics(
    null: &ProbVector,
    counts: &CountVector,
    params: &CorrectionParams,
) -> Result<PerStatistic<f64>> {
    let mle = counts.mle();
    let n = counts.sample_size();
    Ok(PerStatistic {
        q: pearson_q(null, &mle, n)?,
        q_ab: corrected_q(null, counts, params)?,
        g: kullback_g(null, &mle, n)?,
        g_ab: corrected_g(null, counts, params)?,
        rc23: power_divergence(CRESSIE_READ_LAMBDA, null, &mle, n)?,
        g_ku: ku_corrected_g(null, &mle, n, counts.zero_count())?,
    })
}

/// Everything computed for one test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub model: NullModel,
    pub n: u64,
    pub categories: usize,
    pub zero_cells: usize,
    pub df: u32,
    pub alpha: f64,
    pub threshold: f64,
    pub statistics: PerStatistic<f64>,
    pub rejects: PerStatistic<bool>,
    /// Reject when `Q^ab` or `G^ab` exceeds the threshold.
    pub combined_reject: bool,
    pub correction: CorrectionParams,
    pub config: CorrectionConfig,
    pub expected_below_half: usize,
    pub expected_below_five: usize,
    #[serde(default, skip_serializing_if = "RemovalLog::is_empty")]
    pub removed: RemovalLog,
    pub warnings: Vec<String>,
}

pub fn run_test(
    counts: &CountVector,
    model: &NullModel,
    alpha: f64,
    config: &CorrectionConfig,
) -> Result<TestReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let fitted = fit_null(model, counts)?;
    let params = choose_ab(counts, config);
    let statistics = evaluate_statistics(&fitted.p_star0, counts, &params)?;
    let threshold = chi_square_quantile(1.0 - alpha, fitted.df)?;
    let rejects = statistics.map(|v| v > threshold);
    let n = counts.total() as f64;
    let expected = fitted.p_star0.as_slice().iter().map(|p| p * n);
    let warnings = params
        .fallback_reason
        .and_then(|r| r.warning())
        .map(str::to_owned)
        .into_iter()
        .collect();
    Ok(TestReport {
        model: model.clone(),
        n: counts.total(),
        categories: counts.categories(),
        zero_cells: counts.zero_count(),
        df: fitted.df,
        alpha,
        threshold,
        statistics,
        combined_reject: rejects.q_ab || rejects.g_ab,
        rejects,
        correction: params,
        config: *config,
        expected_below_half: expected.clone().filter(|&e| e < 0.5).count(),
        expected_below_five: expected.filter(|&e| e < 5.0).count(),
        removed: RemovalLog::default(),
        warnings,
    })
}

/// Independence test on a two-way table; empty rows and columns are
/// dropped first and listed in the report.
pub fn run_independence_test(
    table: &ContingencyTable,
    alpha: f64,
    config: &CorrectionConfig,
) -> Result<TestReport> {
    let (clean, removed) = remove_empty_margins(table)?;
    let (rows, cols) = clean.dims();
    let model = NullModel::independence(rows, cols)?;
    let mut report = run_test(&clean.flatten()?, &model, alpha, config)?;
    if !removed.is_empty() {
        report.warnings.push(format!(
            "removed {} empty row(s) and {} empty column(s)",
            removed.rows.len(),
            removed.cols.len()
        ));
    }
    report.removed = removed;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tables::Dataset;
    use proptest::prelude::*;

    #[test]
    fn parameter_counts_and_df() {
        let m = NullModel::independence(3, 6).unwrap();
        assert_eq!((m.parameter_count(), m.df()), (7, 10));
        let m = NullModel::independence(2, 16).unwrap();
        assert_eq!((m.parameter_count(), m.df()), (16, 15));
        let m = NullModel::simple(ProbVector::uniform(100).unwrap()).unwrap();
        assert_eq!((m.parameter_count(), m.df()), (0, 99));
        assert!(NullModel::independence(1, 5).is_err());
        assert!(NullModel::simple(ProbVector::new(vec![0.0, 1.0]).unwrap()).is_err());
    }

    #[test]
    fn symmetric_two_by_two() {
        let m = NullModel::independence(2, 2).unwrap();
        let x = CountVector::new(vec![1, 1, 1, 1]).unwrap();
        let f = fit_null(&m, &x).unwrap();
        assert_eq!(f.p_star0.as_slice(), &[0.25; 4]);
        assert_eq!(f.df, 1);
    }

    #[test]
    fn empty_margin_rejected() {
        let m = NullModel::independence(2, 2).unwrap();
        let x = CountVector::new(vec![1, 0, 3, 0]).unwrap();
        assert_eq!(fit_null(&m, &x), Err(Error::EmptyMargin { axis: "column", index: 1 }));
    }

    #[test]
    fn proportional_counts_accept() {
        let p0 = ProbVector::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let m = NullModel::simple(p0).unwrap();
        let x = CountVector::new(vec![1, 2, 3, 4]).unwrap();
        let r = run_test(&x, &m, 0.05, &CorrectionConfig::default()).unwrap();
        for s in Statistic::ALL {
            assert!(r.statistics.get(s).abs() < 1e-12, "{s:?}");
            assert!(!r.rejects.get(s));
        }
        assert!(!r.combined_reject);
    }

    #[test]
    fn sclerosis_report() {
        let r = run_independence_test(&Dataset::Sclerosis.table(), 0.05, &CorrectionConfig::default())
            .unwrap();
        assert_eq!((r.n, r.categories, r.zero_cells, r.df), (794, 32, 1, 15));
        assert_eq!(r.expected_below_five, 16);
        let s = r.statistics;
        assert!((s.q - 14.62).abs() < 0.01);
        assert!((s.g - 15.82).abs() < 0.01);
        assert!((s.rc23 - 14.85).abs() < 0.01);
        assert!(r.rejects.g_ab && !r.rejects.q_ab && !r.rejects.q && !r.rejects.g && !r.rejects.rc23);
        assert!(r.combined_reject);
    }

    #[test]
    fn rivers_report() {
        let r = run_independence_test(&Dataset::Rivers.table(), 0.05, &CorrectionConfig::default())
            .unwrap();
        assert_eq!((r.n, r.categories, r.zero_cells, r.df), (21, 18, 7, 10));
        assert_eq!(r.expected_below_half, 3);
        assert!((r.threshold - 18.31).abs() < 0.01);
        assert!((r.statistics.g_ku - (r.statistics.g - 7.0)).abs() < 1e-12);
        assert!(r.rejects.q_ab && r.rejects.g && r.rejects.g_ab);
        assert!(!r.rejects.q && !r.rejects.rc23);
        assert!(r.combined_reject);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn invalid_alpha() {
        let m = NullModel::independence(2, 2).unwrap();
        let x = CountVector::new(vec![1, 2, 3, 4]).unwrap();
        assert!(run_test(&x, &m, 0.0, &CorrectionConfig::default()).is_err());
        assert!(run_test(&x, &m, 1.0, &CorrectionConfig::default()).is_err());
    }

    #[test]
    fn report_json_round_trip() {
        let r = run_independence_test(&Dataset::Rivers.table(), 0.05, &CorrectionConfig::default())
            .unwrap();
        let json = serde_json::to_string(&r).unwrap();
        let back: TestReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }

    fn table() -> impl Strategy<Value = ContingencyTable> {
        (2usize..5, 2usize..6)
            .prop_flat_map(|(i, j)| prop::collection::vec(prop::collection::vec(0u64..6, j), i))
            .prop_filter_map("needs nonempty margins", |rows| {
                let t = ContingencyTable::from_rows(rows).ok()?;
                (t.row_totals().iter().all(|&s| s > 0) && t.col_totals().iter().all(|&s| s > 0))
                    .then_some(t)
            })
    }

    proptest! {
        #[test]
        fn independence_fit_reproduces_margins(t in table()) {
            let (i, j) = t.dims();
            let m = NullModel::independence(i, j).unwrap();
            let f = fit_null(&m, &t.flatten().unwrap()).unwrap();
            let p = f.p_star0.as_slice();
            let n = t.total() as f64;
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for (r, &tot) in t.row_totals().iter().enumerate() {
                let s: f64 = p[r * j..(r + 1) * j].iter().sum();
                prop_assert!((s - tot as f64 / n).abs() < 1e-12);
            }
            for (c, &tot) in t.col_totals().iter().enumerate() {
                let s: f64 = (0..i).map(|r| p[r * j + c]).sum();
                prop_assert!((s - tot as f64 / n).abs() < 1e-12);
            }
            prop_assert_eq!(f.df as usize, i * j - m.parameter_count() - 1);
        }

        #[test]
        fn relabeling_rows_and_columns_changes_nothing(t in table(), rot_r in 0usize..5, rot_c in 0usize..6) {
            let (i, j) = t.dims();
            let mut rows: Vec<Vec<u64>> = (0..i).map(|r| (0..j).map(|c| t.get(r, c)).collect()).collect();
            rows.rotate_left(rot_r % i);
            for r in rows.iter_mut() {
                r.rotate_left(rot_c % j);
            }
            let u = ContingencyTable::from_rows(rows).unwrap();
            let config = CorrectionConfig::default();
            let a = run_independence_test(&t, 0.05, &config).unwrap();
            let b = run_independence_test(&u, 0.05, &config).unwrap();
            for s in Statistic::ALL {
                let (x, y) = (a.statistics.get(s), b.statistics.get(s));
                prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0), "{:?}: {} vs {}", s, x, y);
            }
        }

        #[test]
        fn smaller_alpha_rejects_less(t in table(), a1 in 0.001f64..0.5, gap in 0.001f64..0.4) {
            let config = CorrectionConfig::default();
            let strict = run_independence_test(&t, a1, &config).unwrap();
            let loose = run_independence_test(&t, a1 + gap, &config).unwrap();
            for s in Statistic::ALL {
                prop_assert!(!strict.rejects.get(s) || loose.rejects.get(s));
            }
        }
    }
}
