//! Geometric and stochastic effects.

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::edges::{hough, hough_peaks};
use super::lines::canny_mask;
use super::ops::{bilinear, merge, split, Plane};
use crate::codecs::quantize::quantize;
use crate::imageio::{to_u8, NormalizedImage};

/// Pixel positions shuffled with a seeded Fisher-Yates permutation.
pub fn scramble(img: &NormalizedImage, seed: u64) -> NormalizedImage {
    let mut px: Vec<[u8; 3]> = img.pixels().collect();
    px.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    NormalizedImage::from_rgb(img.width(), img.height(), px.concat())
}

/// Per-channel multiplicative Gaussian noise `v * (1 + amount * n)`.
pub fn noise(img: &NormalizedImage, amount: f64, seed: u64) -> NormalizedImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let px = img
        .as_bytes()
        .iter()
        .map(|&v| {
            let n: f64 = rng.sample(StandardNormal);
            to_u8((v as f64 * (1.0 + amount * n)).clamp(0.0, 255.0))
        })
        .collect();
    NormalizedImage::from_rgb(img.width(), img.height(), px)
}

/// Quantizes to `n` colors and refills the raster row-major with the colors
/// sorted by descending frequency (ties by palette order).
pub fn stripes(img: &NormalizedImage, n: usize) -> NormalizedImage {
    let q = quantize(img, n);
    let mut counts = vec![0usize; q.palette.len()];
    for &i in &q.indices {
        counts[i as usize] += 1;
    }
    let mut order: Vec<usize> = (0..q.palette.len()).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    let mut px = Vec::with_capacity(img.raw_size());
    for k in order {
        for _ in 0..counts[k] {
            px.extend_from_slice(&q.palette[k]);
        }
    }
    NormalizedImage::from_rgb(img.width(), img.height(), px)
}

/// Radial inward warp about the center.
pub fn implode(img: &NormalizedImage, amount: f64) -> NormalizedImage {
    let (w, h) = (img.width(), img.height());
    let (cx, cy) = (w as f64 / 2.0, h as f64 / 2.0);
    let radius = cx.max(cy);
    let (sx, sy) = if w > h { (1.0, w as f64 / h as f64) } else { (h as f64 / w as f64, 1.0) };
    let planes = split(img);
    let mut out = planes.clone();
    for y in 0..h {
        for x in 0..w {
            let dx = sx * (x as f64 + 0.5 - cx);
            let dy = sy * (y as f64 + 0.5 - cy);
            let d2 = dx * dx + dy * dy;
            if d2 >= radius * radius || d2 == 0.0 {
                continue;
            }
            let factor = (PI * d2.sqrt() / radius / 2.0).sin().powf(-amount);
            let (srcx, srcy) = (factor * dx / sx + cx - 0.5, factor * dy / sy + cy - 0.5);
            for c in 0..3 {
                out[c].v[y * w + x] = bilinear(&planes[c], srcx, srcy);
            }
        }
    }
    merge(&out)
}

/// Dominant skew in degrees, in (-45, 45], from the strongest Hough peak.
pub fn estimate_skew(img: &NormalizedImage) -> f64 {
    let (w, h) = (img.width(), img.height());
    let mask = canny_mask(img, 1.4, 0.1, 0.3);
    let peaks = hough_peaks(&hough(&mask, w, h), 40, 40, 20);
    let Some(best) = peaks.iter().max_by(|a, b| a.votes.cmp(&b.votes).then(b.theta_deg.cmp(&a.theta_deg))) else {
        return 0.0;
    };
    // direction of the line relative to horizontal
    let mut a = best.theta_deg as f64 - 90.0;
    while a <= -45.0 {
        a += 90.0;
    }
    while a > 45.0 {
        a -= 90.0;
    }
    a
}

/// Rotates by `-skew` and crops the largest centered rectangle of the
/// original aspect ratio that contains no padding.
pub fn rotate_crop(img: &NormalizedImage, skew_deg: f64) -> NormalizedImage {
    if skew_deg == 0.0 {
        return img.clone();
    }
    let (w, h) = (img.width() as f64, img.height() as f64);
    let phi = skew_deg.to_radians();
    let (c, s) = (phi.cos().abs(), phi.sin().abs());
    let k = (w / (w * c + h * s)).min(h / (w * s + h * c));
    let ow = ((w * k).floor() as usize).max(1);
    let oh = ((h * k).floor() as usize).max(1);
    let (cx, cy) = ((w - 1.0) / 2.0, (h - 1.0) / 2.0);
    let (ocx, ocy) = ((ow as f64 - 1.0) / 2.0, (oh as f64 - 1.0) / 2.0);
    let (cos, sin) = (phi.cos(), phi.sin());
    let planes = split(img);
    let mut out = [Plane::new(ow, oh), Plane::new(ow, oh), Plane::new(ow, oh)];
    for y in 0..oh {
        for x in 0..ow {
            let (dx, dy) = (x as f64 - ocx, y as f64 - ocy);
            // output is the source rotated by -skew, so sample along +skew
            let sxp = cx + dx * cos - dy * sin;
            let syp = cy + dx * sin + dy * cos;
            for ch in 0..3 {
                out[ch].v[y * ow + x] = bilinear(&planes[ch], sxp, syp);
            }
        }
    }
    merge(&out)
}

pub fn deskew_zoom(img: &NormalizedImage) -> NormalizedImage {
    rotate_crop(img, estimate_skew(img))
}

/// Color histogram, for permutation checks.
pub fn histogram(img: &NormalizedImage) -> HashMap<[u8; 3], usize> {
    let mut m = HashMap::new();
    for p in img.pixels() {
        *m.entry(p).or_insert(0) += 1;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> NormalizedImage {
        NormalizedImage::from_fn(37, 29, |x, y| [(x * 7) as u8, (y * 9) as u8, ((x * y) % 256) as u8])
    }

    #[test]
    fn scramble_is_a_seeded_permutation() {
        let img = fixture();
        let a = scramble(&img, 7);
        assert_eq!(histogram(&a), histogram(&img));
        assert_eq!(a, scramble(&img, 7));
        assert_ne!(a, scramble(&img, 8));
    }

    #[test]
    fn noise_is_seeded_and_keeps_black() {
        let img = fixture();
        assert_eq!(noise(&img, 0.5, 3), noise(&img, 0.5, 3));
        let black = NormalizedImage::filled(8, 8, [0; 3]);
        assert_eq!(noise(&black, 0.5, 1), black);
    }

    #[test]
    fn stripes_order_by_frequency() {
        let img = NormalizedImage::from_fn(10, 10, |x, y| if x + y * 10 < 30 { [255, 0, 0] } else { [0, 0, 255] });
        let out = stripes(&img, 20);
        for i in 0..100 {
            let expect = if i < 70 { [0, 0, 255] } else { [255, 0, 0] };
            assert_eq!(out.get(i % 10, i / 10), expect);
        }
    }

    #[test]
    fn implode_keeps_constant_and_border() {
        let img = NormalizedImage::filled(40, 30, [9, 99, 199]);
        assert_eq!(implode(&img, 0.5), img);
        let img = fixture();
        let out = implode(&img, 0.5);
        assert_eq!(out.get(0, 0), img.get(0, 0));
    }

    #[test]
    fn upright_image_is_not_rotated() {
        let img = NormalizedImage::from_fn(80, 60, |_, y| if (y / 10) % 2 == 0 { [0; 3] } else { [255; 3] });
        assert_eq!(estimate_skew(&img), 0.0);
        assert_eq!(deskew_zoom(&img), img);
    }

    #[test]
    fn tilted_lines_are_detected_and_cropped() {
        let t = 10f64.to_radians();
        let img = NormalizedImage::from_fn(120, 120, |x, y| {
            let v = (y as f64 - 60.0) * t.cos() - (x as f64 - 60.0) * t.sin();
            if (v / 15.0).floor() as i64 % 2 == 0 {
                [0; 3]
            } else {
                [255; 3]
            }
        });
        let skew = estimate_skew(&img);
        assert!((skew - 10.0).abs() <= 1.0, "{skew}");
        let out = deskew_zoom(&img);
        assert!(out.width() < 120 && out.height() < 120);
        assert_eq!(out.width(), out.height());
    }
}
