//! Statistics over corpus matrices: projections, neighbor queries,
//! classification, regression, temporal resemblance and rolling trends.
//!
//! Fitting routines are single-threaded and deterministic. Only replicate
//! loops in [`classify::stepwise_accuracy`] run in parallel, each replicate on
//! its own derived seed.

pub mod classify;
pub mod knn;
pub mod pca;
pub mod regress;
pub mod smooth;
pub mod temporal;
pub mod trend;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::store::{CorpusMatrix, StoreError};

pub use classify::{
    feature_importance, lda_fit, lda_predict, stepwise_accuracy, Importance, LdaModel, StepwiseOptions, StepwiseRow,
};
pub use knn::{cosine, cosine_knn, vector_arith, Neighbor};
pub use pca::{pca_fit, pca_fit_rows, pca_project, PcaModel};
pub use regress::{linreg_fit_eval, LinRegReport};
pub use smooth::{lowess, smooth_residuals, Lowess};
pub use temporal::{temporal_resemblance, TemporalOptions, TemporalProfile};
pub use trend::{rolling_trend, TrendOptions, TrendRow};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("need at least {need} rows, got {got}")]
    TooFewRows { need: usize, got: usize },
    #[error("query vector has zero norm")]
    ZeroVector,
    #[error("schema mismatch: expected {expected} values, got {got}")]
    SchemaMismatch { expected: usize, got: usize },
    #[error("row `{row}` has no `{key}` value")]
    MissingLabel { row: String, key: String },
    #[error("need at least 2 classes, got {0}")]
    TooFewClasses(usize),
    #[error("class `{class}` has {rows} rows; {need} required")]
    ClassTooSmall { class: String, rows: usize, need: usize },
    #[error("pooled covariance is singular after regularization")]
    SingularCovariance,
    #[error("no usable features remain after dropping constant and collinear columns")]
    NoFeatures,
    #[error("row `{0}` has no valid year")]
    MissingYear(String),
    #[error("span {span} covers fewer than 3 of {n} points")]
    SpanTooSmall { span: f64, n: usize },
    #[error("expression error: {0}")]
    Expression(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
}

/// Seed for replicate `r` of a run seeded with `seed` (splitmix64 step).
pub fn derive_seed(seed: u64, r: u64) -> u64 {
    let mut z = seed ^ r.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Median of a non-empty slice (mean of the two middle values when even).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Sample quantile, linear interpolation between order statistics
/// (Hyndman and Fan type 7). `sorted` must be ascending and non-empty.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Per-row metadata labels for `key`.
pub fn labels(m: &CorpusMatrix, key: &str) -> Result<Vec<String>, AnalysisError> {
    (0..m.n_rows())
        .map(|i| {
            m.meta_value(i, key)
                .filter(|v| !v.is_empty())
                .map(str::to_string)
                .ok_or_else(|| AnalysisError::MissingLabel { row: m.ids[i].clone(), key: key.to_string() })
        })
        .collect()
}

/// Per-row years parsed from metadata `key`.
pub fn years(m: &CorpusMatrix, key: &str) -> Result<Vec<f64>, AnalysisError> {
    (0..m.n_rows())
        .map(|i| {
            m.meta_value(i, key)
                .and_then(|v| v.trim().parse::<f64>().ok())
                .filter(|y| y.is_finite())
                .ok_or_else(|| AnalysisError::MissingYear(m.ids[i].clone()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_type7_matches_known_values() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 4.0);
        assert!((quantile_sorted(&v, 0.25) - 1.75).abs() < 1e-15);
        assert!((quantile_sorted(&v, 0.5) - 2.5).abs() < 1e-15);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn derived_seeds_differ() {
        let s: std::collections::BTreeSet<u64> = (0..100).map(|r| derive_seed(7, r)).collect();
        assert_eq!(s.len(), 100);
    }
}
