//! Robust local linear regression (LOWESS) used to residualize scores
//! against year.

use super::{median, AnalysisError};

pub const DEFAULT_SPAN: f64 = 0.3;
pub const DEFAULT_ROBUSTNESS_ITERATIONS: usize = 2;

/// A fitted smoother that can be evaluated at any x.
#[derive(Debug, Clone)]
pub struct Lowess {
    xs: Vec<f64>,
    ys: Vec<f64>,
    robustness: Vec<f64>,
    q: usize,
}

fn tricube(u: f64) -> f64 {
    if u >= 1.0 {
        0.0
    } else {
        let t = 1.0 - u * u * u;
        t * t * t
    }
}

fn bisquare(u: f64) -> f64 {
    if u >= 1.0 {
        0.0
    } else {
        let t = 1.0 - u * u;
        t * t
    }
}

impl Lowess {
    /// Fits with the fraction `span` of points in each neighborhood and
    /// `iterations` robustness reweighting passes.
    pub fn fit(x: &[f64], y: &[f64], span: f64, iterations: usize) -> Result<Lowess, AnalysisError> {
        if x.len() != y.len() {
            return Err(AnalysisError::Invalid("x and y lengths differ".into()));
        }
        let n = x.len();
        let q = (span * n as f64).ceil() as usize;
        if !(span > 0.0 && span <= 1.0) || q < 3 {
            return Err(AnalysisError::SpanTooSmall { span, n });
        }
        let mut idx: Vec<usize> = (0..n).collect();
        // ties in x keep input order so duplicated x values stay deterministic
        idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
        let mut model = Lowess {
            xs: idx.iter().map(|&i| x[i]).collect(),
            ys: idx.iter().map(|&i| y[i]).collect(),
            robustness: vec![1.0; n],
            q: q.min(n),
        };
        for _ in 0..iterations {
            let resid: Vec<f64> = (0..n).map(|i| model.ys[i] - model.eval(model.xs[i])).collect();
            let abs: Vec<f64> = resid.iter().map(|r| r.abs()).collect();
            let s = median(&abs);
            let mean_abs = abs.iter().sum::<f64>() / n as f64;
            if 6.0 * s < 1e-7 * mean_abs || s == 0.0 {
                break;
            }
            model.robustness = resid.iter().map(|r| bisquare(r.abs() / (6.0 * s))).collect();
        }
        Ok(model)
    }

    /// Smoothed value at `x0`: weighted linear fit over the `q` points
    /// nearest to `x0`.
    pub fn eval(&self, x0: f64) -> f64 {
        let n = self.xs.len();
        // grow a window of q nearest points around the insertion position
        let pos = self.xs.partition_point(|&v| v < x0);
        let (mut lo, mut hi) = (pos, pos);
        while hi - lo < self.q {
            let take_left = if lo == 0 {
                false
            } else if hi == n {
                true
            } else {
                x0 - self.xs[lo - 1] <= self.xs[hi] - x0
            };
            if take_left {
                lo -= 1;
            } else {
                hi += 1;
            }
        }
        let h = (x0 - self.xs[lo]).max(self.xs[hi - 1] - x0);
        let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in lo..hi {
            let d = self.xs[i] - x0;
            let w = if h > 0.0 { tricube(d.abs() / (h * (1.0 + 1e-12))) } else { 1.0 } * self.robustness[i];
            sw += w;
            sx += w * d;
            sy += w * self.ys[i];
            sxx += w * d * d;
            sxy += w * d * self.ys[i];
        }
        if sw <= 0.0 {
            return self.ys[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
        }
        let (mx, my) = (sx / sw, sy / sw);
        let var = sxx / sw - mx * mx;
        let scale = (h * h).max(1e-300);
        if var <= 1e-10 * scale {
            return my;
        }
        let slope = (sxy / sw - mx * my) / var;
        // local model is centred at x0, so the fit there is my - slope * mx
        my - slope * mx
    }
}

pub fn lowess(x: &[f64], y: &[f64]) -> Result<Lowess, AnalysisError> {
    Lowess::fit(x, y, DEFAULT_SPAN, DEFAULT_ROBUSTNESS_ITERATIONS)
}

/// `y - fit(x)` with the default smoother fitted on all points.
pub fn smooth_residuals(x: &[f64], y: &[f64]) -> Result<Vec<f64>, AnalysisError> {
    if x.len() < 20 {
        return Err(AnalysisError::TooFewRows { need: 20, got: x.len() });
    }
    let fit = lowess(x, y)?;
    Ok(x.iter().zip(y).map(|(&xi, &yi)| yi - fit.eval(xi)).collect())
}
