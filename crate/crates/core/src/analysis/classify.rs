//! Linear discriminant classification, pairwise logistic importance
//! ordering and stepwise accuracy curves.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use super::{derive_seed, labels, rng, AnalysisError};
use crate::store::CorpusMatrix;

/// Shrinkage added to the pooled covariance, relative to its mean diagonal.
pub const LDA_LAMBDA: f64 = 1e-6;
/// Columns whose training correlation with an earlier kept column exceeds
/// this are dropped.
pub const COLLINEAR_CORR: f64 = 0.999;
pub const LOGIT_ITERATIONS: usize = 25;
pub const LOGIT_RIDGE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LdaModel {
    pub classes: Vec<String>,
    /// Matrix columns used, after dropping constant and collinear ones.
    pub columns: Vec<usize>,
    pub features: Vec<String>,
    /// Training mean and sd used to standardize each kept column.
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
    /// Class means in standardized units.
    pub means: Vec<Vec<f64>>,
    /// Per-class discriminant weights and intercepts (uniform priors).
    pub coef: Vec<Vec<f64>>,
    pub intercept: Vec<f64>,
}

impl LdaModel {
    pub fn scores(&self, row: &[f64]) -> Vec<f64> {
        let z: Vec<f64> =
            self.columns.iter().enumerate().map(|(k, &j)| (row[j] - self.center[k]) / self.scale[k]).collect();
        self.coef.iter().zip(&self.intercept).map(|(w, b)| b + w.iter().zip(&z).map(|(a, x)| a * x).sum::<f64>()).collect()
    }

    /// Index into `classes` of the best-scoring class; ties go to the first.
    pub fn predict_index(&self, row: &[f64]) -> usize {
        let s = self.scores(row);
        let mut best = 0;
        for (c, &v) in s.iter().enumerate() {
            if v > s[best] {
                best = c;
            }
        }
        best
    }
}

/// Train/test row indices drawn per class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Samples `train_n` rows per class for training and `test_n` of the rest
/// (all of the rest when `None`) for testing.
pub fn stratified_split(
    labels: &[String],
    train_n: usize,
    test_n: Option<usize>,
    seed: u64,
) -> Result<Split, AnalysisError> {
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_class.entry(l.as_str()).or_default().push(i);
    }
    if by_class.len() < 2 {
        return Err(AnalysisError::TooFewClasses(by_class.len()));
    }
    let need = train_n + test_n.unwrap_or(0);
    let mut r = rng(seed);
    let mut split = Split { train: Vec::new(), test: Vec::new() };
    for (class, mut rows) in by_class {
        if rows.len() < need.max(train_n).max(1) || train_n == 0 {
            return Err(AnalysisError::ClassTooSmall { class: class.to_string(), rows: rows.len(), need: need.max(1) });
        }
        rows.shuffle(&mut r);
        split.train.extend_from_slice(&rows[..train_n]);
        let rest = &rows[train_n..];
        split.test.extend_from_slice(&rest[..test_n.unwrap_or(rest.len()).min(rest.len())]);
    }
    Ok(split)
}

/// [`stratified_split`] for held-out evaluation: every class must keep at
/// least one test row.
pub fn evaluation_split(
    labels: &[String],
    train_n: usize,
    test_n: Option<usize>,
    seed: u64,
) -> Result<Split, AnalysisError> {
    if test_n == Some(0) {
        return Err(AnalysisError::Invalid("test_n must be at least 1".into()));
    }
    let split = stratified_split(labels, train_n, test_n, seed)?;
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for &i in &split.test {
        *counts.entry(labels[i].as_str()).or_default() += 1;
    }
    let classes: BTreeSet<&str> = labels.iter().map(String::as_str).collect();
    if let Some(c) = classes.iter().find(|c| !counts.contains_key(**c)) {
        let rows = labels.iter().filter(|l| l.as_str() == *c).count();
        return Err(AnalysisError::ClassTooSmall { class: c.to_string(), rows, need: train_n + 1 });
    }
    Ok(split)
}

fn mean_sd(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Columns of `cols` that vary on `rows` and are not near-duplicates of an
/// earlier kept column, with their means and sds.
fn usable_columns(m: &CorpusMatrix, rows: &[usize], cols: &[usize]) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let mut kept: Vec<usize> = Vec::new();
    let mut center = Vec::new();
    let mut scale = Vec::new();
    let mut zcols: Vec<Vec<f64>> = Vec::new();
    let n = rows.len() as f64;
    for &j in cols {
        let (mean, sd) = mean_sd(rows.iter().map(|&i| m.get(i, j)));
        let mag = rows.iter().map(|&i| m.get(i, j).abs()).fold(0.0, f64::max);
        if !(sd > 1e-12 * mag) || !sd.is_finite() {
            continue;
        }
        let z: Vec<f64> = rows.iter().map(|&i| (m.get(i, j) - mean) / sd).collect();
        let collinear = zcols
            .iter()
            .any(|other| (other.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>() / n).abs() > COLLINEAR_CORR);
        if collinear {
            continue;
        }
        kept.push(j);
        center.push(mean);
        scale.push(sd);
        zcols.push(z);
    }
    (kept, center, scale)
}

/// Fits LDA on `rows` of `m` using candidate columns `cols`; `labels` has
/// one entry per matrix row.
pub fn lda_fit_rows(
    m: &CorpusMatrix,
    labels: &[String],
    rows: &[usize],
    cols: &[usize],
) -> Result<LdaModel, AnalysisError> {
    let classes: Vec<String> = {
        let mut c: Vec<String> = rows.iter().map(|&i| labels[i].clone()).collect();
        c.sort();
        c.dedup();
        c
    };
    if classes.len() < 2 {
        return Err(AnalysisError::TooFewClasses(classes.len()));
    }
    let class_of: BTreeMap<&str, usize> = classes.iter().enumerate().map(|(k, c)| (c.as_str(), k)).collect();
    let (columns, center, scale) = usable_columns(m, rows, cols);
    let d = columns.len();
    if d == 0 {
        return Err(AnalysisError::NoFeatures);
    }
    let z = |i: usize| -> DVector<f64> { DVector::from_fn(d, |k, _| (m.get(i, columns[k]) - center[k]) / scale[k]) };
    let kc = classes.len();
    let mut sums = vec![DVector::<f64>::zeros(d); kc];
    let mut counts = vec![0usize; kc];
    for &i in rows {
        let c = class_of[labels[i].as_str()];
        sums[c] += z(i);
        counts[c] += 1;
    }
    let means: Vec<DVector<f64>> = sums.iter().zip(&counts).map(|(s, &n)| s / n as f64).collect();
    let mut pooled = DMatrix::<f64>::zeros(d, d);
    for &i in rows {
        let c = class_of[labels[i].as_str()];
        let dev = z(i) - &means[c];
        pooled.syger(1.0, &dev, &dev, 1.0);
    }
    let dof = (rows.len().saturating_sub(kc)).max(1) as f64;
    pooled /= dof;
    // the lower triangle is what syger filled; mirror it
    pooled.fill_upper_triangle_with_lower_triangle();
    let ridge = LDA_LAMBDA * pooled.trace() / d as f64;
    for k in 0..d {
        pooled[(k, k)] += ridge;
    }
    let chol = Cholesky::new(pooled).ok_or(AnalysisError::SingularCovariance)?;
    let mut coef = Vec::with_capacity(kc);
    let mut intercept = Vec::with_capacity(kc);
    for mu in &means {
        let w = chol.solve(mu);
        intercept.push(-0.5 * mu.dot(&w));
        coef.push(w.iter().copied().collect());
    }
    Ok(LdaModel {
        classes,
        features: columns.iter().map(|&j| m.features[j].clone()).collect(),
        columns,
        center,
        scale,
        means: means.iter().map(|v| v.iter().copied().collect()).collect(),
        coef,
        intercept,
    })
}

/// Samples `train_n` rows per `label_key` class with `seed` and fits on all
/// columns. Returns the model and the split (test = remaining rows).
pub fn lda_fit(
    m: &CorpusMatrix,
    label_key: &str,
    train_n: usize,
    seed: u64,
) -> Result<(LdaModel, Split), AnalysisError> {
    let labels = labels(m, label_key)?;
    let split = stratified_split(&labels, train_n, None, seed)?;
    let cols: Vec<usize> = (0..m.n_features()).collect();
    Ok((lda_fit_rows(m, &labels, &split.train, &cols)?, split))
}

pub fn lda_predict(model: &LdaModel, m: &CorpusMatrix, rows: &[usize]) -> Vec<String> {
    rows.iter().map(|&i| model.classes[model.predict_index(m.row(i))].clone()).collect()
}

/// Fraction of `rows` whose predicted class equals their label.
pub fn accuracy(model: &LdaModel, m: &CorpusMatrix, labels: &[String], rows: &[usize]) -> f64 {
    let hits = rows.iter().filter(|&&i| model.classes[model.predict_index(m.row(i))] == labels[i]).count();
    hits as f64 / rows.len().max(1) as f64
}

/// Confusion counts `[true][predicted]` over `model.classes`.
pub fn confusion(model: &LdaModel, m: &CorpusMatrix, labels: &[String], rows: &[usize]) -> Vec<Vec<usize>> {
    let k = model.classes.len();
    let mut out = vec![vec![0; k]; k];
    for &i in rows {
        if let Some(t) = model.classes.iter().position(|c| *c == labels[i]) {
            out[t][model.predict_index(m.row(i))] += 1;
        }
    }
    out
}

/// Wald statistic of the slope in a one-feature logistic regression.
/// `x` should be standardized.
pub fn logistic_slope_t(x: &[f64], y: &[bool]) -> f64 {
    let (mut b0, mut b1) = (0.0f64, 0.0f64);
    for _ in 0..LOGIT_ITERATIONS {
        let (mut g0, mut g1) = (0.0, 0.0);
        let mut h = [[0.0f64; 2]; 2];
        for (&xi, &yi) in x.iter().zip(y) {
            let p = 1.0 / (1.0 + (-(b0 + b1 * xi)).exp());
            let r = if yi { 1.0 } else { 0.0 } - p;
            let w = (p * (1.0 - p)).max(1e-300);
            g0 += r;
            g1 += r * xi;
            h[0][0] += w;
            h[0][1] += w * xi;
            h[1][1] += w * xi * xi;
        }
        g1 -= LOGIT_RIDGE * b1;
        h[1][1] += LOGIT_RIDGE;
        h[1][0] = h[0][1];
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        if !(det > 0.0) {
            break;
        }
        let d0 = (h[1][1] * g0 - h[0][1] * g1) / det;
        let d1 = (h[0][0] * g1 - h[1][0] * g0) / det;
        b0 += d0;
        b1 += d1;
        if d0.abs() < 1e-12 && d1.abs() < 1e-12 {
            break;
        }
    }
    // information at the final estimate
    let mut hf = [[0.0f64; 2]; 2];
    for &xi in x {
        let p = 1.0 / (1.0 + (-(b0 + b1 * xi)).exp());
        let w = p * (1.0 - p);
        hf[0][0] += w;
        hf[0][1] += w * xi;
        hf[1][1] += w * xi * xi;
    }
    hf[1][1] += LOGIT_RIDGE;
    let det = hf[0][0] * hf[1][1] - hf[0][1] * hf[0][1];
    if !(det > 0.0) {
        return 0.0;
    }
    let var_b1 = hf[0][0] / det;
    let t = b1 / var_b1.sqrt();
    if t.is_finite() {
        t
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Importance {
    pub feature: String,
    pub column: usize,
    /// Class pairs the feature alone separates perfectly.
    pub separated_pairs: usize,
    pub mean_abs_t: f64,
}

/// Ranks features by pairwise one-feature logistic fits. For every unordered
/// class pair, the slope's |t| is recorded; features are ordered by the
/// number of pairs they separate perfectly, then by mean |t|, then by id.
/// `forced_first` (normally `b_gif_1`) is moved to the front when present.
/// Classes larger than `max_per_class` are subsampled with `seed`.
pub fn feature_importance(
    m: &CorpusMatrix,
    label_key: &str,
    forced_first: Option<&str>,
    max_per_class: Option<usize>,
    seed: u64,
) -> Result<Vec<Importance>, AnalysisError> {
    let labels = labels(m, label_key)?;
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_class.entry(l.as_str()).or_default().push(i);
    }
    if by_class.len() < 2 {
        return Err(AnalysisError::TooFewClasses(by_class.len()));
    }
    if let Some(cap) = max_per_class {
        let mut r = rng(seed);
        for rows in by_class.values_mut() {
            if rows.len() > cap {
                rows.shuffle(&mut r);
                rows.truncate(cap);
                rows.sort_unstable();
            }
        }
    }
    let groups: Vec<&Vec<usize>> = by_class.values().collect();
    let mut pairs = Vec::new();
    for a in 0..groups.len() {
        for b in a + 1..groups.len() {
            pairs.push((a, b));
        }
    }
    let mut out: Vec<Importance> = (0..m.n_features())
        .map(|j| {
            let mut sum_t = 0.0;
            let mut separated = 0;
            for &(a, b) in &pairs {
                let xa: Vec<f64> = groups[a].iter().map(|&i| m.get(i, j)).collect();
                let xb: Vec<f64> = groups[b].iter().map(|&i| m.get(i, j)).collect();
                let (lo_a, hi_a) = xa.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
                let (lo_b, hi_b) = xb.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
                if hi_a < lo_b || hi_b < lo_a {
                    separated += 1;
                }
                let x: Vec<f64> = xa.iter().chain(&xb).copied().collect();
                let y: Vec<bool> = (0..x.len()).map(|k| k >= xa.len()).collect();
                let (mean, sd) = mean_sd(x.iter().copied());
                let mag = x.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
                if sd > 1e-12 * mag && sd.is_finite() {
                    let z: Vec<f64> = x.iter().map(|v| (v - mean) / sd).collect();
                    sum_t += logistic_slope_t(&z, &y).abs();
                }
            }
            Importance {
                feature: m.features[j].clone(),
                column: j,
                separated_pairs: separated,
                mean_abs_t: sum_t / pairs.len() as f64,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        b.separated_pairs
            .cmp(&a.separated_pairs)
            .then(b.mean_abs_t.total_cmp(&a.mean_abs_t))
            .then_with(|| a.feature.cmp(&b.feature))
    });
    if let Some(first) = forced_first {
        if let Some(pos) = out.iter().position(|r| r.feature == first) {
            let r = out.remove(pos);
            out.insert(0, r);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepwiseOptions {
    pub train_sizes: Vec<usize>,
    /// Test rows per class; `None` tests on every row not used for training.
    pub test_n: Option<usize>,
    /// Prefix lengths of the ordering to evaluate; `None` evaluates all.
    pub feature_counts: Option<Vec<usize>>,
    pub replicates: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepwiseRow {
    pub train_n: usize,
    pub n_features: usize,
    pub mean_accuracy: f64,
    pub sd_accuracy: f64,
    pub replicates: usize,
}

/// Mean held-out LDA accuracy for each training size and each prefix of
/// `order` (matrix column indices, most important first).
pub fn stepwise_accuracy(
    m: &CorpusMatrix,
    labels: &[String],
    order: &[usize],
    opts: &StepwiseOptions,
) -> Result<Vec<StepwiseRow>, AnalysisError> {
    if opts.replicates == 0 {
        return Err(AnalysisError::Invalid("replicates must be at least 1".into()));
    }
    let counts: Vec<usize> = match &opts.feature_counts {
        Some(c) => c.iter().copied().filter(|&k| k >= 1 && k <= order.len()).collect(),
        None => (1..=order.len()).collect(),
    };
    if counts.is_empty() {
        return Err(AnalysisError::Invalid("no feature counts within the ordering".into()));
    }
    let mut out = Vec::new();
    for (t, &train_n) in opts.train_sizes.iter().enumerate() {
        // one seed stream per (train size, replicate)
        let per_rep: Vec<Result<Vec<f64>, AnalysisError>> = (0..opts.replicates)
            .into_par_iter()
            .map(|r| {
                let seed = derive_seed(opts.seed, (t * opts.replicates + r) as u64);
                let split = evaluation_split(labels, train_n, opts.test_n, seed)?;
                counts
                    .iter()
                    .map(|&k| {
                        let model = lda_fit_rows(m, labels, &split.train, &order[..k])?;
                        Ok(accuracy(&model, m, labels, &split.test))
                    })
                    .collect()
            })
            .collect();
        let per_rep: Vec<Vec<f64>> = per_rep.into_iter().collect::<Result<_, _>>()?;
        for (c, &k) in counts.iter().enumerate() {
            let accs: Vec<f64> = per_rep.iter().map(|v| v[c]).collect();
            let n = accs.len() as f64;
            let mean = accs.iter().sum::<f64>() / n;
            let sd = if accs.len() > 1 {
                (accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            out.push(StepwiseRow { train_n, n_features: k, mean_accuracy: mean, sd_accuracy: sd, replicates: accs.len() });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    /// `classes` spherical Gaussian clusters in `d` dims. Class c is shifted
    /// by `sep * (1 + c / informative)` along coordinate `c % informative`.
    fn clusters(classes: usize, per: usize, d: usize, sep: f64, informative: usize, seed: u64) -> CorpusMatrix {
        let mut r = rng(seed);
        let mut m = CorpusMatrix::new((0..d).map(|j| format!("f{j:02}")).collect(), "h".into());
        for c in 0..classes {
            for i in 0..per {
                let row: Vec<f64> = (0..d)
                    .map(|j| {
                        let noise: f64 = r.sample(StandardNormal);
                        let centre = if j == c % informative { sep * (1 + c / informative) as f64 } else { 0.0 };
                        centre + noise
                    })
                    .collect();
                let meta = BTreeMap::from([("style".to_string(), format!("k{c}"))]);
                m.push_row(format!("c{c}_{i:03}"), meta, &row);
            }
        }
        m
    }

    #[test]
    fn separated_clusters_classify_perfectly() {
        let m = clusters(2, 200, 3, 10.0, 1, 1);
        let (model, split) = lda_fit(&m, "style", 100, 7).unwrap();
        let l = labels(&m, "style").unwrap();
        assert_eq!(split.test.len(), 200);
        assert_eq!(accuracy(&model, &m, &l, &split.test), 1.0);
    }

    #[test]
    fn shuffled_labels_give_chance() {
        let m = clusters(4, 60, 5, 3.0, 4, 2);
        let mut l = labels(&m, "style").unwrap();
        let mut r = rng(5);
        let mut accs = Vec::new();
        for rep in 0..100 {
            l.shuffle(&mut r);
            let split = stratified_split(&l, 30, None, rep).unwrap();
            let model = lda_fit_rows(&m, &l, &split.train, &[0, 1, 2, 3, 4]).unwrap();
            accs.push(accuracy(&model, &m, &l, &split.test));
        }
        let mean = accs.iter().sum::<f64>() / accs.len() as f64;
        assert!((mean - 0.25).abs() < 0.05, "{mean}");
    }

    #[test]
    fn fit_is_deterministic() {
        let m = clusters(3, 50, 4, 2.0, 3, 3);
        let (a, sa) = lda_fit(&m, "style", 20, 11).unwrap();
        let (b, sb) = lda_fit(&m, "style", 20, 11).unwrap();
        assert_eq!(sa, sb);
        assert_eq!(lda_predict(&a, &m, &sa.test), lda_predict(&b, &m, &sb.test));
    }

    #[test]
    fn drops_constant_and_collinear_columns() {
        let mut m = clusters(2, 30, 2, 4.0, 1, 4);
        let mut wide = CorpusMatrix::new(vec!["a".into(), "b".into(), "const".into(), "dup".into()], "h".into());
        for i in 0..m.n_rows() {
            let row = m.row(i).to_vec();
            wide.push_row(m.ids[i].clone(), m.meta[i].clone(), &[row[0], row[1], 5.0, 2.0 * row[0] + 1.0]);
        }
        m = wide;
        let l = labels(&m, "style").unwrap();
        let rows: Vec<usize> = (0..m.n_rows()).collect();
        let model = lda_fit_rows(&m, &l, &rows, &[0, 1, 2, 3]).unwrap();
        assert_eq!(model.features, vec!["a", "b"]);
    }

    #[test]
    fn too_small_class_is_reported() {
        let m = clusters(2, 5, 2, 1.0, 1, 5);
        assert!(matches!(lda_fit(&m, "style", 10, 1), Err(AnalysisError::ClassTooSmall { .. })));
    }

    #[test]
    fn relabeling_permutes_predictions() {
        let m = clusters(3, 40, 3, 3.0, 3, 6);
        let l = labels(&m, "style").unwrap();
        let renamed: Vec<String> = l
            .iter()
            .map(|c| match c.as_str() {
                "k0" => "z".to_string(),
                "k1" => "a".to_string(),
                _ => "m".to_string(),
            })
            .collect();
        let rows: Vec<usize> = (0..m.n_rows()).step_by(2).collect();
        let test: Vec<usize> = (1..m.n_rows()).step_by(2).collect();
        let a = lda_fit_rows(&m, &l, &rows, &[0, 1, 2]).unwrap();
        let b = lda_fit_rows(&m, &renamed, &rows, &[0, 1, 2]).unwrap();
        let map = |c: &str| match c {
            "k0" => "z",
            "k1" => "a",
            _ => "m",
        };
        let pa: Vec<String> = lda_predict(&a, &m, &test).iter().map(|c| map(c).to_string()).collect();
        assert_eq!(pa, lda_predict(&b, &m, &test));
    }

    #[test]
    fn logistic_t_matches_reference_fit() {
        // independent fit by gradient ascent on the same penalized likelihood
        let mut r = rng(9);
        let x: Vec<f64> = (0..200).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
        let y: Vec<bool> = x.iter().map(|&v| r.random::<f64>() < 1.0 / (1.0 + (-(0.3 + 1.2 * v)).exp())).collect();
        let (mut b0, mut b1) = (0.0, 0.0);
        for _ in 0..20000 {
            let (mut g0, mut g1) = (0.0, 0.0);
            for (&xi, &yi) in x.iter().zip(&y) {
                let p = 1.0 / (1.0 + (-(b0 + b1 * xi)).exp());
                g0 += yi as u8 as f64 - p;
                g1 += (yi as u8 as f64 - p) * xi;
            }
            b0 += 0.01 * g0;
            b1 += 0.01 * (g1 - LOGIT_RIDGE * b1);
        }
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        for &xi in &x {
            let p = 1.0 / (1.0 + (-(b0 + b1 * xi)).exp());
            a += p * (1.0 - p);
            b += p * (1.0 - p) * xi;
            c += p * (1.0 - p) * xi * xi;
        }
        c += LOGIT_RIDGE;
        let want = b1 / (a / (a * c - b * b)).sqrt();
        assert!((logistic_slope_t(&x, &y) - want).abs() < 1e-6 * want.abs());
    }

    #[test]
    fn informative_feature_ranks_after_forced_baseline() {
        let mut r = rng(12);
        let mut m = CorpusMatrix::new(vec!["b_gif_1".into(), "n1".into(), "signal".into(), "n2".into()], "h".into());
        for c in 0..3 {
            for i in 0..80 {
                let s: f64 = r.sample::<f64, _>(StandardNormal) + 1.5 * c as f64;
                let row = [r.random::<f64>(), r.random::<f64>(), s, r.random::<f64>()];
                m.push_row(format!("{c}_{i}"), BTreeMap::from([("style".into(), format!("s{c}"))]), &row);
            }
        }
        let imp = feature_importance(&m, "style", Some("b_gif_1"), None, 1).unwrap();
        assert_eq!(imp[0].feature, "b_gif_1");
        assert_eq!(imp[1].feature, "signal");
    }

    #[test]
    fn importance_ignores_column_order() {
        let m = clusters(3, 40, 5, 1.0, 3, 13);
        let perm = [3, 0, 4, 1, 2];
        let pm = m.select_features(&perm);
        let a: Vec<String> = feature_importance(&m, "style", None, None, 1).unwrap().into_iter().map(|r| r.feature).collect();
        let b: Vec<String> = feature_importance(&pm, "style", None, None, 1).unwrap().into_iter().map(|r| r.feature).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn stepwise_plateaus_once_signal_enters() {
        let m = clusters(2, 60, 8, 6.0, 1, 14);
        let l = labels(&m, "style").unwrap();
        // informative column 0 placed seventh
        let order = [1, 2, 3, 4, 5, 6, 0, 7];
        let opts = StepwiseOptions {
            train_sizes: vec![30],
            test_n: Some(30),
            feature_counts: None,
            replicates: 10,
            seed: 3,
        };
        let rows = stepwise_accuracy(&m, &l, &order, &opts).unwrap();
        assert_eq!(rows.len(), 8);
        assert!(rows[5].mean_accuracy < 0.8);
        assert!(rows[6].mean_accuracy > 0.99 && rows[7].mean_accuracy > 0.99);
        let again = stepwise_accuracy(&m, &l, &order, &opts).unwrap();
        assert_eq!(rows, again);
    }
}
