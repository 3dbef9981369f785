//! Rolling quantiles of a value over time with adaptive window width.

use serde::Serialize;

use super::{quantile_sorted, AnalysisError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendOptions {
    pub half_window: u32,
    pub max_half_window: u32,
    pub min_n: usize,
    pub quantiles: Vec<f64>,
    /// Spacing of evaluation times, starting at the floor of the earliest.
    pub step: f64,
}

impl Default for TrendOptions {
    fn default() -> Self {
        TrendOptions {
            half_window: 10,
            max_half_window: 50,
            min_n: 1000,
            quantiles: vec![0.025, 0.25, 0.5, 0.75, 0.975],
            step: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendRow {
    pub time: f64,
    /// Half-width actually used.
    pub half_window: u32,
    pub n: usize,
    /// Empty when the window holds no items.
    pub quantiles: Vec<f64>,
}

impl TrendRow {
    pub fn stretched(&self, base: u32) -> bool {
        self.half_window > base
    }
}

/// Quantiles of `values` within `[t - w, t + w]` for each evaluation time
/// `t`. The half-width `w` starts at `half_window` and grows by one until
/// the window holds `min_n` items or reaches `max_half_window`.
pub fn rolling_trend(times: &[f64], values: &[f64], opts: &TrendOptions) -> Result<Vec<TrendRow>, AnalysisError> {
    if times.len() != values.len() {
        return Err(AnalysisError::Invalid("times and values lengths differ".into()));
    }
    if opts.max_half_window < opts.half_window || !(opts.step > 0.0) {
        return Err(AnalysisError::Invalid("bad window settings".into()));
    }
    if opts.quantiles.iter().any(|q| !(0.0..=1.0).contains(q)) {
        return Err(AnalysisError::Invalid("quantiles must lie in [0, 1]".into()));
    }
    let mut pairs: Vec<(f64, f64)> =
        times.iter().zip(values).filter(|(t, v)| t.is_finite() && v.is_finite()).map(|(&t, &v)| (t, v)).collect();
    if pairs.is_empty() {
        return Ok(Vec::new());
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let ts: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let count = |t: f64, w: f64| ts.partition_point(|&x| x <= t + w) - ts.partition_point(|&x| x < t - w);
    let start = ts[0].floor();
    let end = ts[ts.len() - 1];
    let mut out = Vec::new();
    let mut i = 0u64;
    loop {
        let t = start + i as f64 * opts.step;
        if t > end {
            break;
        }
        i += 1;
        let mut w = opts.half_window;
        while count(t, w as f64) < opts.min_n && w < opts.max_half_window {
            w += 1;
        }
        let (lo, hi) = (ts.partition_point(|&x| x < t - w as f64), ts.partition_point(|&x| x <= t + w as f64));
        let mut window: Vec<f64> = pairs[lo..hi].iter().map(|p| p.1).collect();
        window.sort_by(f64::total_cmp);
        let quantiles =
            if window.is_empty() { Vec::new() } else { opts.quantiles.iter().map(|&q| quantile_sorted(&window, q)).collect() };
        out.push(TrendRow { time: t, half_window: w, n: window.len(), quantiles });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_values_give_flat_lines() {
        let t: Vec<f64> = (0..500).map(|i| 1900.0 + (i % 50) as f64).collect();
        let v = vec![4.25; 500];
        let rows = rolling_trend(&t, &v, &TrendOptions { min_n: 10, ..Default::default() }).unwrap();
        assert!(rows.iter().all(|r| r.quantiles.iter().all(|&q| q == 4.25)));
    }

    #[test]
    fn dense_data_keeps_base_window() {
        let t: Vec<f64> = (0..60_000).map(|i| 1900.0 + (i % 100) as f64).collect();
        let v: Vec<f64> = (0..60_000).map(|i| i as f64).collect();
        let rows = rolling_trend(&t, &v, &TrendOptions::default()).unwrap();
        assert!(rows.iter().all(|r| r.half_window == 10));
    }

    #[test]
    fn gaps_give_empty_rows() {
        let t = vec![0.0, 200.0];
        let rows = rolling_trend(&t, &[1.0, 2.0], &TrendOptions { min_n: 5, ..Default::default() }).unwrap();
        let mid = rows.iter().find(|r| r.time == 100.0).unwrap();
        assert_eq!(mid.n, 0);
        assert!(mid.quantiles.is_empty());
        assert_eq!(mid.half_window, 50);
    }
}
