//! Temporal resemblance: where in time an artwork's nearest neighbors sit,
//! corrected for the bias that the corpus's first and last years impose.

use serde::Serialize;

use super::smooth::{Lowess, DEFAULT_ROBUSTNESS_ITERATIONS, DEFAULT_SPAN};
use super::{median, years, AnalysisError};
use crate::store::CorpusMatrix;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TemporalOptions {
    pub k: usize,
    pub year_key: String,
    pub artist_key: String,
    /// Years used to fit the smoother; all rows are scored.
    pub fit_range: Option<(f64, f64)>,
    pub span: f64,
}

impl Default for TemporalOptions {
    fn default() -> Self {
        TemporalOptions {
            k: 100,
            year_key: "year".into(),
            artist_key: "artist".into(),
            fit_range: None,
            span: DEFAULT_SPAN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TemporalProfile {
    pub ids: Vec<String>,
    pub years: Vec<f64>,
    /// Median signed offset (neighbor year minus own year).
    pub raw: Vec<f64>,
    /// `raw` minus the smoother's prediction at the row's year.
    pub adjusted: Vec<f64>,
    pub neighbors_used: Vec<usize>,
    /// Rows with fewer than `k` eligible neighbors.
    pub short: Vec<bool>,
}

/// Raw and smoother-adjusted temporal resemblance for every row. Neighbors
/// are the `k` most cosine-similar rows by other artists (rows without an
/// artist only exclude themselves).
pub fn temporal_resemblance(m: &CorpusMatrix, opts: &TemporalOptions) -> Result<TemporalProfile, AnalysisError> {
    let n = m.n_rows();
    if opts.k == 0 {
        return Err(AnalysisError::Invalid("k must be at least 1".into()));
    }
    let yrs = years(m, &opts.year_key)?;
    let artists: Vec<Option<&str>> =
        (0..n).map(|i| m.meta_value(i, &opts.artist_key).filter(|a| !a.is_empty())).collect();
    let d = m.n_features();
    let unit: Vec<f64> = (0..n)
        .flat_map(|i| {
            let row = m.row(i);
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            row.iter().map(move |x| if norm > 0.0 { x / norm } else { 0.0 })
        })
        .collect();
    let mut raw = Vec::with_capacity(n);
    let mut used = Vec::with_capacity(n);
    let mut short = Vec::with_capacity(n);
    let mut cand: Vec<(f64, usize)> = Vec::with_capacity(n);
    for i in 0..n {
        let qi = &unit[i * d..(i + 1) * d];
        cand.clear();
        for j in 0..n {
            if j == i || (artists[i].is_some() && artists[i] == artists[j]) {
                continue;
            }
            let s: f64 = qi.iter().zip(&unit[j * d..(j + 1) * d]).map(|(a, b)| a * b).sum();
            cand.push((s, j));
        }
        let by_rank = |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0).then_with(|| m.ids[a.1].cmp(&m.ids[b.1]));
        let k = opts.k.min(cand.len());
        if k == 0 {
            return Err(AnalysisError::TooFewRows { need: opts.k + 1, got: 1 });
        }
        if k < cand.len() {
            cand.select_nth_unstable_by(k - 1, by_rank);
        }
        let offsets: Vec<f64> = cand[..k].iter().map(|&(_, j)| yrs[j] - yrs[i]).collect();
        raw.push(median(&offsets));
        used.push(k);
        short.push(k < opts.k);
    }
    if short.iter().any(|&s| s) {
        log::warn!("{} rows have fewer than {} eligible neighbors", short.iter().filter(|&&s| s).count(), opts.k);
    }
    let (fx, fy): (Vec<f64>, Vec<f64>) = yrs
        .iter()
        .zip(&raw)
        .filter(|(y, _)| opts.fit_range.is_none_or(|(lo, hi)| **y >= lo && **y <= hi))
        .map(|(a, b)| (*a, *b))
        .unzip();
    if fx.len() < 20 {
        return Err(AnalysisError::TooFewRows { need: 20, got: fx.len() });
    }
    let fit = Lowess::fit(&fx, &fy, opts.span, DEFAULT_ROBUSTNESS_ITERATIONS)?;
    let adjusted = yrs.iter().zip(&raw).map(|(&y, &r)| r - fit.eval(y)).collect();
    Ok(TemporalProfile { ids: m.ids.clone(), years: yrs, raw, adjusted, neighbors_used: used, short })
}
