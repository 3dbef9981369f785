//! Statistical image features that do not involve compression.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codecs::quantize::quantize_image;
use crate::color::rgb_to_lab;
use crate::imageio::NormalizedImage;
use crate::transforms::edges::{hough, hough_peaks, THETA_BINS};
use crate::transforms::lines::canny_mask;
use crate::transforms::ops::luma_u8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("fewer than two usable box sizes for a {window}-pixel window")]
    DegenerateScales { window: usize },
    #[error("invalid stat config: {0}")]
    BadConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FractalSource {
    /// Dark pixels of the luma threshold at 128.
    Bilevel,
    /// Canny edge pixels.
    Canny,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractalWindow {
    pub id: String,
    /// Window side as a fraction of the mean image side.
    pub window: f64,
    pub step: f64,
    pub source: FractalSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StatConfig {
    pub quantize_n: usize,
    pub hough_width: usize,
    pub hough_height: usize,
    pub hough_threshold: u32,
    pub angle_bins: usize,
    pub canny_sigma: f64,
    pub canny_lo: f64,
    pub canny_hi: f64,
    pub fractal: Vec<FractalWindow>,
}

impl Default for StatConfig {
    fn default() -> Self {
        let fw = |id: &str, window: f64, step: f64, source| FractalWindow { id: id.into(), window, step, source };
        StatConfig {
            quantize_n: 200,
            hough_width: 40,
            hough_height: 40,
            hough_threshold: 20,
            angle_bins: 18,
            canny_sigma: 1.4,
            canny_lo: 0.1,
            canny_hi: 0.3,
            fractal: vec![
                fw("fractaldim1", 1.0 / 10.0, 1.0 / 40.0, FractalSource::Bilevel),
                fw("fractaldim2", 1.0 / 3.0, 1.0 / 4.0, FractalSource::Bilevel),
                fw("fractaldim3", 1.0 / 5.0, 1.0 / 6.0, FractalSource::Canny),
            ],
        }
    }
}

impl StatConfig {
    pub fn validate(&self) -> Result<(), FeatureError> {
        let bad = |s: &str| Err(FeatureError::BadConfig(s.into()));
        if self.quantize_n < 2 || self.quantize_n > 256 * 256 * 256 {
            return bad("quantize_n must be at least 2");
        }
        if self.hough_width == 0 || self.hough_height == 0 || self.angle_bins == 0 {
            return bad("hough window and angle_bins must be positive");
        }
        if !(self.canny_lo > 0.0 && self.canny_lo < self.canny_hi && self.canny_hi <= 1.0) {
            return bad("canny thresholds must satisfy 0 < lo < hi <= 1");
        }
        for f in &self.fractal {
            if !(f.window > 0.0 && f.window <= 1.0 && f.step > 0.0 && f.step <= 1.0) {
                return bad("fractal window and step must lie in (0, 1]");
            }
        }
        Ok(())
    }

    /// Statistical feature names in output order.
    pub fn names(&self) -> Vec<String> {
        let mut v: Vec<String> = self.fractal.iter().map(|f| f.id.clone()).collect();
        v.extend(
            [
                "stats_angleentropy",
                "stats_colfreq_entropy",
                "stats_colfreq_max",
                "stats_colfreq_mean",
                "stats_colfreq_median",
                "stats_colfreq_sd",
                "stats_colorfulness_lab",
                "stats_colorfulness_rgb",
                "stats_contrastrange",
                "stats_contrastsd",
            ]
            .map(String::from),
        );
        v
    }
}

/// Mean and population standard deviation. Deviations are taken from the
/// first element so constant inputs give exactly zero spread.
fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let x0 = xs[0];
    let shift = xs.iter().map(|x| x - x0).sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - x0 - shift) * (x - x0 - shift)).sum::<f64>() / n;
    (x0 + shift, var.sqrt())
}

/// Opponent-channel colorfulness: `sigma_rgyb + 0.3 * mu_rgyb`.
pub fn colorfulness_rgb(img: &NormalizedImage) -> f64 {
    let rg: Vec<f64> = img.pixels().map(|p| p[0] as f64 - p[1] as f64).collect();
    let yb: Vec<f64> = img.pixels().map(|p| 0.5 * (p[0] as f64 + p[1] as f64) - p[2] as f64).collect();
    let (m_rg, s_rg) = mean_sd(&rg);
    let (m_yb, s_yb) = mean_sd(&yb);
    (s_rg * s_rg + s_yb * s_yb).sqrt() + 0.3 * (m_rg * m_rg + m_yb * m_yb).sqrt()
}

/// CIELab colorfulness: `sigma_ab + 0.94 * mu_C`.
pub fn colorfulness_lab(img: &NormalizedImage) -> f64 {
    let lab: Vec<[f64; 3]> = img.pixels().map(rgb_to_lab).collect();
    let a: Vec<f64> = lab.iter().map(|c| c[1]).collect();
    let b: Vec<f64> = lab.iter().map(|c| c[2]).collect();
    let (_, sa) = mean_sd(&a);
    let (_, sb) = mean_sd(&b);
    let mu_c = lab.iter().map(|c| c[1].hypot(c[2])).sum::<f64>() / lab.len() as f64;
    (sa * sa + sb * sb).sqrt() + 0.94 * mu_c
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorFrequencyStats {
    pub entropy: f64,
    pub max: f64,
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
}

/// Statistics of relative color frequencies, without quantization.
pub fn frequency_stats(img: &NormalizedImage) -> ColorFrequencyStats {
    let mut counts: HashMap<[u8; 3], usize> = HashMap::new();
    for p in img.pixels() {
        *counts.entry(p).or_insert(0) += 1;
    }
    let n = img.pixel_count() as f64;
    let mut p: Vec<f64> = counts.values().map(|&c| c as f64 / n).collect();
    p.sort_by(|a, b| a.total_cmp(b));
    let entropy = -p.iter().map(|&q| q * q.log2()).sum::<f64>();
    let k = p.len();
    let median = if k % 2 == 1 { p[k / 2] } else { 0.5 * (p[k / 2 - 1] + p[k / 2]) };
    let (mean, sd) = mean_sd(&p);
    ColorFrequencyStats { entropy: entropy.max(0.0), max: p[k - 1], mean, median, sd }
}

/// Color-frequency statistics after median-cut quantization to `n` colors.
pub fn color_frequency_stats(img: &NormalizedImage, n: usize) -> ColorFrequencyStats {
    frequency_stats(&quantize_image(img, n))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContrastStats {
    pub range: f64,
    pub sd: f64,
}

/// Range and population standard deviation of Lab lightness after quantizing to `n` colors.
pub fn contrast_stats(img: &NormalizedImage, n: usize) -> ContrastStats {
    lightness_stats(&quantize_image(img, n))
}

fn lightness_stats(img: &NormalizedImage) -> ContrastStats {
    let mut cache: HashMap<[u8; 3], f64> = HashMap::new();
    let l: Vec<f64> = img.pixels().map(|p| *cache.entry(p).or_insert_with(|| rgb_to_lab(p)[0])).collect();
    let lo = l.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (_, sd) = mean_sd(&l);
    ContrastStats { range: hi - lo, sd }
}

/// Shannon entropy (bits) of detected Hough line angles over `bins` equal
/// bins spanning [0, 180) degrees. No lines gives 0.
pub fn angle_entropy_from_mask(mask: &[bool], w: usize, h: usize, cfg: &StatConfig) -> f64 {
    let lines = hough_peaks(&hough(mask, w, h), cfg.hough_width, cfg.hough_height, cfg.hough_threshold);
    if lines.is_empty() {
        return 0.0;
    }
    let mut counts = vec![0usize; cfg.angle_bins];
    for l in &lines {
        counts[l.theta_deg * cfg.angle_bins / THETA_BINS] += 1;
    }
    let n = lines.len() as f64;
    let e = -counts.iter().filter(|&&c| c > 0).map(|&c| c as f64 / n * (c as f64 / n).log2()).sum::<f64>();
    e.max(0.0)
}

pub fn hough_angle_entropy(img: &NormalizedImage, cfg: &StatConfig) -> f64 {
    let mask = canny_mask(img, cfg.canny_sigma, cfg.canny_lo, cfg.canny_hi);
    angle_entropy_from_mask(&mask, img.width(), img.height(), cfg)
}

/// Binary raster with a summed-area table for O(1) box occupancy tests.
pub struct Foreground {
    w: usize,
    sat: Vec<u32>,
}

impl Foreground {
    pub fn new(mask: &[bool], w: usize, h: usize) -> Self {
        assert_eq!(mask.len(), w * h);
        let mut sat = vec![0u32; (w + 1) * (h + 1)];
        for y in 0..h {
            let mut row = 0u32;
            for x in 0..w {
                row += mask[y * w + x] as u32;
                sat[(y + 1) * (w + 1) + x + 1] = sat[y * (w + 1) + x + 1] + row;
            }
        }
        Foreground { w, sat }
    }

    /// Foreground count in `[x0, x1) x [y0, y1)`.
    #[inline]
    pub fn count(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> u32 {
        let s = self.w + 1;
        self.sat[y1 * s + x1] + self.sat[y0 * s + x0] - self.sat[y0 * s + x1] - self.sat[y1 * s + x0]
    }
}

pub fn bilevel_mask(img: &NormalizedImage) -> Vec<bool> {
    img.pixels().map(|p| luma_u8(p) < 128).collect()
}

/// Box-counting dimension of a mask, averaged over sliding square windows
/// of side `window` moved by `step` pixels. Box sizes are powers of two up
/// to half the window; the dimension of each window is the least-squares
/// slope of log N(e) against log(1/e). Windows without foreground are
/// skipped; an empty mask gives 0.
pub fn box_counting(mask: &[bool], w: usize, h: usize, window: usize, step: usize) -> Result<f64, FeatureError> {
    let window = window.min(w).min(h).max(1);
    let step = step.max(1);
    let sizes: Vec<usize> = (0..).map(|k| 1usize << k).take_while(|&e| e <= window / 2).collect();
    if sizes.len() < 2 {
        return Err(FeatureError::DegenerateScales { window });
    }
    let fg = Foreground::new(mask, w, h);
    let xs: Vec<f64> = sizes.iter().map(|&e| (1.0 / e as f64).ln()).collect();
    let xm = xs.iter().sum::<f64>() / xs.len() as f64;
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    let (mut total, mut used) = (0.0, 0usize);
    let mut y0 = 0;
    while y0 + window <= h {
        let mut x0 = 0;
        while x0 + window <= w {
            if fg.count(x0, y0, x0 + window, y0 + window) > 0 {
                let mut ys = Vec::with_capacity(sizes.len());
                for &e in &sizes {
                    let mut n = 0u32;
                    for by in (y0..y0 + window).step_by(e) {
                        for bx in (x0..x0 + window).step_by(e) {
                            let (bx1, by1) = ((bx + e).min(x0 + window), (by + e).min(y0 + window));
                            if fg.count(bx, by, bx1, by1) > 0 {
                                n += 1;
                            }
                        }
                    }
                    ys.push((n as f64).ln());
                }
                let ym = ys.iter().sum::<f64>() / ys.len() as f64;
                let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
                total += sxy / sxx;
                used += 1;
            }
            x0 += step;
        }
        y0 += step;
    }
    if used == 0 {
        return Ok(0.0);
    }
    Ok((total / used as f64).clamp(0.0, 2.0))
}

/// Window and step in pixels for fractions of the mean side length.
pub fn window_pixels(w: usize, h: usize, window: f64, step: f64) -> (usize, usize) {
    let m = (w + h) as f64 / 2.0;
    (((window * m).round() as usize).max(1), ((step * m).round() as usize).max(1))
}

pub fn fractal_dimension(
    img: &NormalizedImage,
    window: f64,
    step: f64,
    source: FractalSource,
    cfg: &StatConfig,
) -> Result<f64, FeatureError> {
    let (w, h) = (img.width(), img.height());
    let mask = match source {
        FractalSource::Bilevel => bilevel_mask(img),
        FractalSource::Canny => canny_mask(img, cfg.canny_sigma, cfg.canny_lo, cfg.canny_hi),
    };
    let (wp, sp) = window_pixels(w, h, window, step);
    box_counting(&mask, w, h, wp, sp)
}

/// All statistical features in [`StatConfig::names`] order.
pub fn compute_stats(img: &NormalizedImage, cfg: &StatConfig) -> Result<Vec<f64>, FeatureError> {
    let (w, h) = (img.width(), img.height());
    let canny = canny_mask(img, cfg.canny_sigma, cfg.canny_lo, cfg.canny_hi);
    let bilevel = bilevel_mask(img);
    let mut out = Vec::with_capacity(cfg.fractal.len() + 10);
    for f in &cfg.fractal {
        let mask = match f.source {
            FractalSource::Bilevel => &bilevel,
            FractalSource::Canny => &canny,
        };
        let (wp, sp) = window_pixels(w, h, f.window, f.step);
        out.push(box_counting(mask, w, h, wp, sp)?);
    }
    out.push(angle_entropy_from_mask(&canny, w, h, cfg));
    let q = quantize_image(img, cfg.quantize_n);
    let fs = frequency_stats(&q);
    out.extend([fs.entropy, fs.max, fs.mean, fs.median, fs.sd]);
    out.push(colorfulness_lab(img));
    out.push(colorfulness_rgb(img));
    let c = lightness_stats(&q);
    out.extend([c.range, c.sd]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colorfulness_rgb_analytic() {
        let gray = NormalizedImage::from_fn(10, 10, |x, _| [(x * 20) as u8; 3]);
        assert_eq!(colorfulness_rgb(&gray), 0.0);
        let rg = NormalizedImage::from_fn(10, 10, |x, _| if x < 5 { [255, 0, 0] } else { [0, 255, 0] });
        assert!((colorfulness_rgb(&rg) - 293.25).abs() < 1e-9);
        let red = NormalizedImage::filled(10, 10, [255, 0, 0]);
        let expect = 0.3 * (255f64 * 255.0 + 127.5 * 127.5).sqrt();
        assert!((colorfulness_rgb(&red) - expect).abs() < 1e-9);
    }

    #[test]
    fn colorfulness_lab_basics() {
        let gray = NormalizedImage::from_fn(10, 10, |x, y| [(x * 20 + y) as u8; 3]);
        assert_eq!(colorfulness_lab(&gray), 0.0);
        let rg = NormalizedImage::from_fn(10, 10, |x, _| if x < 5 { [255, 0, 0] } else { [0, 255, 0] });
        let red = NormalizedImage::filled(10, 10, [255, 0, 0]);
        assert!(colorfulness_lab(&rg) > colorfulness_lab(&red));
    }

    #[test]
    fn frequency_uniform_and_constant() {
        let four = NormalizedImage::from_fn(4, 4, |x, _| [[0, 0, 0], [255, 0, 0], [0, 255, 0], [0, 0, 255]][x]);
        let s = color_frequency_stats(&four, 200);
        assert!((s.entropy - 2.0).abs() < 1e-12);
        assert_eq!((s.max, s.mean, s.median, s.sd), (0.25, 0.25, 0.25, 0.0));
        let c = color_frequency_stats(&NormalizedImage::filled(5, 5, [9, 9, 9]), 200);
        assert_eq!((c.entropy, c.max), (0.0, 1.0));
    }

    #[test]
    fn contrast_black_white() {
        let bw = NormalizedImage::from_fn(10, 10, |x, _| if x < 5 { [0; 3] } else { [255; 3] });
        let c = contrast_stats(&bw, 200);
        assert!((c.range - 100.0).abs() < 1e-3);
        assert!((c.sd - 50.0).abs() < 1e-3);
        let k = contrast_stats(&NormalizedImage::filled(6, 6, [30, 60, 90]), 200);
        assert_eq!((k.range, k.sd), (0.0, 0.0));
    }

    #[test]
    fn blank_image_has_zero_angle_entropy() {
        let img = NormalizedImage::filled(100, 100, [200; 3]);
        assert_eq!(hough_angle_entropy(&img, &StatConfig::default()), 0.0);
    }

    #[test]
    fn filled_and_line_dimensions() {
        let (w, h) = (256, 256);
        let full = vec![true; w * h];
        let d = box_counting(&full, w, h, 256, 256).unwrap();
        assert!((d - 2.0).abs() < 1e-9, "{d}");
        let mut line = vec![false; w * h];
        for x in 0..w {
            line[100 * w + x] = true;
        }
        let d = box_counting(&line, w, h, 256, 256).unwrap();
        assert!((d - 1.0).abs() < 0.15, "{d}");
    }

    #[test]
    fn empty_and_degenerate() {
        assert_eq!(box_counting(&[false; 100], 10, 10, 10, 10).unwrap(), 0.0);
        assert!(matches!(box_counting(&[true; 9], 3, 3, 3, 1), Err(FeatureError::DegenerateScales { .. })));
    }

    #[test]
    fn default_names_are_thirteen() {
        assert_eq!(StatConfig::default().names().len(), 13);
    }
}
