//! Linear regression of numeric scores on ensemble vectors.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::Serialize;

use super::pca::pca_fit_rows;
use super::{median, rng, AnalysisError};

/// Diagonal loading relative to the mean diagonal of the centered normal
/// matrix. Two refinement steps remove its bias on well-posed problems.
pub const OLS_RIDGE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinRegReport {
    pub n: usize,
    /// Predictors actually used (after any reduction).
    pub d: usize,
    pub r2: f64,
    pub adjusted_r2: f64,
    /// Median absolute out-of-fold error.
    pub median_abs_error: f64,
    pub folds: usize,
    /// Set when predictors were reduced to this many principal components.
    pub reduced_to: Option<usize>,
}

/// Least-squares fit with intercept. Returns (intercept, slopes).
pub fn ols(x: &DMatrix<f64>, y: &[f64]) -> Result<(f64, Vec<f64>), AnalysisError> {
    let (n, d) = x.shape();
    let ymean = y.iter().sum::<f64>() / n as f64;
    let xmean: Vec<f64> = (0..d).map(|j| x.column(j).sum() / n as f64).collect();
    let xc = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - xmean[j]);
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - ymean));
    let a = xc.transpose() * &xc;
    let b = xc.transpose() * &yc;
    let load = if d > 0 { OLS_RIDGE * (a.trace() / d as f64).max(f64::MIN_POSITIVE) } else { 0.0 };
    let mut reg = a.clone();
    for k in 0..d {
        reg[(k, k)] += load;
    }
    let chol = Cholesky::new(reg).ok_or(AnalysisError::SingularCovariance)?;
    let mut beta = chol.solve(&b);
    for _ in 0..2 {
        let r = &b - &a * &beta;
        beta += chol.solve(&r);
    }
    let intercept = ymean - beta.iter().zip(&xmean).map(|(b, m)| b * m).sum::<f64>();
    Ok((intercept, beta.iter().copied().collect()))
}

fn predict(intercept: f64, beta: &[f64], row: &[f64]) -> f64 {
    intercept + beta.iter().zip(row).map(|(b, x)| b * x).sum::<f64>()
}

/// In-sample adjusted R² plus `folds`-fold median absolute error.
/// When rows do not exceed predictors + 1, predictors are first replaced by
/// their leading principal components.
pub fn linreg_fit_eval(rows: &[Vec<f64>], y: &[f64], folds: usize, seed: u64) -> Result<LinRegReport, AnalysisError> {
    let n = rows.len();
    if n != y.len() {
        return Err(AnalysisError::Invalid(format!("{n} rows but {} targets", y.len())));
    }
    if n < 3 {
        return Err(AnalysisError::TooFewRows { need: 3, got: n });
    }
    let folds = folds.clamp(2, n);
    let mut d = rows[0].len();
    let mut data: Vec<f64> = rows.iter().flatten().copied().collect();
    let mut reduced_to = None;
    // each training fold must stay overdetermined as well
    let train_rows = n - n.div_ceil(folds);
    if train_rows <= d + 1 {
        let k = train_rows.saturating_sub(2).max(1).min(d);
        log::warn!("{n} rows for {d} predictors: reducing to {k} principal components");
        let pca = pca_fit_rows(&data, n, d, k)?;
        data = rows.iter().flat_map(|r| pca.project_row(r)).collect();
        d = pca.components.len();
        reduced_to = Some(d);
    }
    let x = DMatrix::from_row_slice(n, d, &data);
    let (b0, beta) = ols(&x, y)?;
    let ymean = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - ymean).powi(2)).sum();
    let sse: f64 = (0..n).map(|i| (y[i] - predict(b0, &beta, &data[i * d..(i + 1) * d])).powi(2)).sum();
    let r2 = if sst > 0.0 { 1.0 - sse / sst } else { 0.0 };
    let adjusted_r2 = if n > d + 1 { 1.0 - (1.0 - r2) * (n as f64 - 1.0) / (n - d - 1) as f64 } else { r2 };

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng(seed));
    let mut errors = Vec::with_capacity(n);
    for f in 0..folds {
        let test: Vec<usize> = order.iter().copied().skip(f).step_by(folds).collect();
        let train: Vec<usize> = order.iter().copied().enumerate().filter(|(p, _)| p % folds != f).map(|(_, i)| i).collect();
        let xt = DMatrix::from_fn(train.len(), d, |r, j| data[train[r] * d + j]);
        let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let (c0, cb) = ols(&xt, &yt)?;
        for &i in &test {
            errors.push((y[i] - predict(c0, &cb, &data[i * d..(i + 1) * d])).abs());
        }
    }
    Ok(LinRegReport { n, d, r2, adjusted_r2, median_abs_error: median(&errors), folds, reduced_to })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn exact_line_is_recovered() {
        let rows: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64 * 0.37 - 4.0]).collect();
        let y: Vec<f64> = rows.iter().map(|r| 3.0 * r[0] + 1.0).collect();
        let rep = linreg_fit_eval(&rows, &y, 5, 1).unwrap();
        assert!((rep.adjusted_r2 - 1.0).abs() < 1e-9);
        assert!(rep.median_abs_error < 1e-9, "{}", rep.median_abs_error);
    }

    #[test]
    fn independent_target_has_no_fit() {
        let mut r = rng(3);
        let rows: Vec<Vec<f64>> = (0..2000).map(|_| (0..3).map(|_| r.random::<f64>()).collect()).collect();
        let y: Vec<f64> = (0..2000).map(|_| r.random::<f64>()).collect();
        let rep = linreg_fit_eval(&rows, &y, 10, 1).unwrap();
        assert!(rep.adjusted_r2 <= 0.05);
    }

    #[test]
    fn noisy_mae_tracks_half_normal_median() {
        let sigma = 0.5;
        let mut r = rng(4);
        let rows: Vec<Vec<f64>> = (0..3000).map(|_| (0..4).map(|_| r.sample(StandardNormal)).collect()).collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|x| 1.0 + x[0] - 2.0 * x[1] + 0.5 * x[3] + sigma * r.sample::<f64, _>(StandardNormal))
            .collect();
        let rep = linreg_fit_eval(&rows, &y, 10, 2).unwrap();
        let want = sigma * 0.6745;
        assert!((rep.median_abs_error - want).abs() < 0.1 * want, "{}", rep.median_abs_error);
    }

    #[test]
    fn underdetermined_is_reduced() {
        let mut r = rng(5);
        let rows: Vec<Vec<f64>> = (0..12).map(|_| (0..30).map(|_| r.random::<f64>()).collect()).collect();
        let y: Vec<f64> = rows.iter().map(|x| x[0]).collect();
        let rep = linreg_fit_eval(&rows, &y, 3, 1).unwrap();
        assert!(rep.reduced_to.is_some() && rep.d < 8);
    }
}
