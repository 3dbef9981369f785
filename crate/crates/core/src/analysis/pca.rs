//! Principal components of a corpus matrix.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use super::AnalysisError;
use crate::store::CorpusMatrix;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PcaModel {
    pub features: Vec<String>,
    pub mean: Vec<f64>,
    /// One orthonormal row per component.
    pub components: Vec<Vec<f64>>,
    /// Sample variance (n - 1 denominator) along each component.
    pub explained_variance: Vec<f64>,
    pub total_variance: f64,
}

impl PcaModel {
    pub fn explained_ratio(&self) -> Vec<f64> {
        self.explained_variance.iter().map(|v| v / self.total_variance).collect()
    }

    pub fn project_row(&self, row: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| c.iter().zip(row).zip(&self.mean).map(|((a, x), m)| a * (x - m)).sum())
            .collect()
    }

    pub fn reconstruct(&self, coords: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (c, &s) in self.components.iter().zip(coords) {
            for (o, a) in out.iter_mut().zip(c) {
                *o += s * a;
            }
        }
        out
    }
}

/// Top-`k` principal directions of the centered matrix. Components beyond
/// the numerical rank are dropped with a warning.
pub fn pca_fit(m: &CorpusMatrix, k: usize) -> Result<PcaModel, AnalysisError> {
    let mut model = pca_fit_rows(&m.data, m.n_rows(), m.n_features(), k)?;
    model.features = m.features.clone();
    Ok(model)
}

/// As [`pca_fit`] over a row-major `n x d` slice.
pub fn pca_fit_rows(data: &[f64], n: usize, d: usize, k: usize) -> Result<PcaModel, AnalysisError> {
    if k == 0 {
        return Err(AnalysisError::Invalid("k must be at least 1".into()));
    }
    if n < 2 || n < k {
        return Err(AnalysisError::TooFewRows { need: k.max(2), got: n });
    }
    let mut mean = vec![0.0; d];
    for row in data.chunks_exact(d) {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered = DMatrix::from_fn(n, d, |i, j| data[i * d + j] - mean[j]);
    let cov = (centered.transpose() * &centered) / (n as f64 - 1.0);
    let total_variance = cov.trace();
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let top = eig.eigenvalues[order[0]].max(0.0);
    let tol = top * 1e-12 * d as f64;
    let rank = order.iter().filter(|&&i| eig.eigenvalues[i] > tol).count();
    let take = if k > rank {
        log::warn!("requested {k} components but the matrix has rank {rank}");
        rank.max(1)
    } else {
        k
    };
    let mut components = Vec::with_capacity(take);
    let mut explained_variance = Vec::with_capacity(take);
    for &i in order.iter().take(take) {
        let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        // sign: the largest-magnitude loading is positive (first one on ties)
        let pivot = v
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (j, x)| if x.abs() > best.1.abs() { (j, *x) } else { best })
            .1;
        if pivot < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(v);
        explained_variance.push(eig.eigenvalues[i].max(0.0));
    }
    Ok(PcaModel { features: Vec::new(), mean, components, explained_variance, total_variance })
}

/// Coordinates of every row of `m` on the model's components.
pub fn pca_project(model: &PcaModel, m: &CorpusMatrix) -> Result<Vec<Vec<f64>>, AnalysisError> {
    if m.n_features() != model.mean.len() {
        return Err(AnalysisError::SchemaMismatch { expected: model.mean.len(), got: m.n_features() });
    }
    Ok((0..m.n_rows()).map(|i| model.project_row(m.row(i))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random(n: usize, d: usize, seed: u64) -> Vec<f64> {
        let mut r = super::super::rng(seed);
        (0..n * d).map(|_| r.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn line_data_has_one_component() {
        let data: Vec<f64> = (0..20).flat_map(|i| [i as f64, 2.0 * i as f64]).collect();
        let m = pca_fit_rows(&data, 20, 2, 1).unwrap();
        assert!((m.explained_variance[0] / m.total_variance - 1.0).abs() < 1e-9);
        let c = &m.components[0];
        assert!((c[0] - 1.0 / 5f64.sqrt()).abs() < 1e-12 && (c[1] - 2.0 / 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn components_are_orthonormal() {
        let data = random(50, 10, 3);
        let m = pca_fit_rows(&data, 50, 10, 10).unwrap();
        for a in 0..10 {
            for b in 0..10 {
                let dot: f64 = m.components[a].iter().zip(&m.components[b]).map(|(x, y)| x * y).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-8);
            }
        }
        assert!(m.explained_variance.windows(2).all(|w| w[0] >= w[1]));
        let sum: f64 = m.explained_variance.iter().sum();
        assert!((sum - m.total_variance).abs() < 1e-6 * m.total_variance);
    }

    #[test]
    fn full_projection_reconstructs() {
        let data = random(30, 6, 9);
        let m = pca_fit_rows(&data, 30, 6, 6).unwrap();
        for row in data.chunks(6) {
            let back = m.reconstruct(&m.project_row(row));
            for (a, b) in back.iter().zip(row) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rank_deficient_request_is_truncated() {
        let data: Vec<f64> = (0..10).flat_map(|i| [i as f64, 0.5 * i as f64, 1.0]).collect();
        let m = pca_fit_rows(&data, 10, 3, 3).unwrap();
        assert_eq!(m.components.len(), 1);
    }

    #[test]
    fn largest_loading_is_positive() {
        let data: Vec<f64> = (0..10).flat_map(|i| [-(i as f64), 0.1 * i as f64]).collect();
        let m = pca_fit_rows(&data, 10, 2, 1).unwrap();
        assert!(m.components[0][0] > 0.0);
    }
}
