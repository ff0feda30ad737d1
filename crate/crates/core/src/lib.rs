//! Goodness-of-fit and independence testing for sparse multinomial vectors
//! and contingency tables.
//!
//! Alongside the classical power-divergence statistics (Pearson's `Q`,
//! Kullback's `G`, Read–Cressie `RC^2/3`) the crate computes zero-cell
//! corrected statistics `Q^ab` and `G^ab`, which replace the maximum
//! likelihood estimate by an estimator that assigns a small mass to every
//! empty cell. A seeded Monte Carlo engine estimates type I risks and powers.

pub mod chisq;
pub mod corrections;
pub mod divergence;
pub mod error;
pub mod models;
pub mod montecarlo;
pub mod prob;
pub mod tables;

pub use chisq::{chi_square_cdf, chi_square_quantile};
pub use corrections::{
    choose_ab, corrected_estimator, corrected_g, corrected_q, CorrectionConfig, CorrectionParams,
    EpsPolicy,
};
pub use divergence::{kullback_g, ku_corrected_g, pearson_q, power_divergence};
pub use error::{Error, Result};
pub use models::{fit_null, run_test, FittedNull, NullModel, Statistic, TestReport};
pub use prob::{CountVector, ProbVector, SampleSize};
pub use tables::ContingencyTable;
