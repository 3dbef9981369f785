//! Line-detection and emboss filters.

use super::edges::{canny, hough, hough_peaks, render_lines};
use super::ops::{
    box_mean, convolve2d, equalize, gaussian_blur, gray_image, gray_plane, median3, merge, sobel, split, Plane,
};
use crate::imageio::NormalizedImage;

fn mask_image(mask: &[bool], w: usize, h: usize) -> NormalizedImage {
    let mut px = Vec::with_capacity(w * h * 3);
    for &m in mask {
        let v = if m { 255 } else { 0 };
        px.extend_from_slice(&[v, v, v]);
    }
    NormalizedImage::from_rgb(w, h, px)
}

pub fn canny_mask(img: &NormalizedImage, sigma: f64, lo: f64, hi: f64) -> Vec<bool> {
    canny(&gray_plane(img), sigma, lo, hi)
}

/// White edge pixels on black.
pub fn canny_edges(img: &NormalizedImage, sigma: f64, lo: f64, hi: f64) -> NormalizedImage {
    mask_image(&canny_mask(img, sigma, lo, hi), img.width(), img.height())
}

/// Canny mask multiplied into a blurred copy of the image.
pub fn cartoon(img: &NormalizedImage, sigma: f64, lo: f64, hi: f64, blur: f64) -> NormalizedImage {
    let mask = canny_mask(img, sigma, lo, hi);
    let planes = split(img).map(|p| {
        let b = gaussian_blur(&p, blur);
        Plane { w: b.w, h: b.h, v: b.v.iter().zip(&mask).map(|(&v, &m)| if m { v } else { 0.0 }).collect() }
    });
    merge(&planes)
}

/// Grayscale divided by its own blur; flat regions go to white.
pub fn division_gray(img: &NormalizedImage, sigma: f64) -> NormalizedImage {
    let g = gray_plane(img);
    let b = gaussian_blur(&g, sigma);
    gray_image(&g.zip(&b, |v, m| if m <= 1e-6 { 1.0 } else { (v / m).min(1.0) }))
}

/// Amplified difference from the local box mean of radius `r`.
fn edge_plane(p: &Plane, r: usize) -> Plane {
    let gain = ((2 * r + 1) * (2 * r + 1)) as f32;
    p.zip(&box_mean(p, r), |v, m| (gain * (v - m)).clamp(0.0, 1.0))
}

pub fn edge_gray(img: &NormalizedImage, r: usize) -> NormalizedImage {
    gray_image(&edge_plane(&gray_plane(img), r))
}

pub fn edge_color(img: &NormalizedImage, r: usize) -> NormalizedImage {
    merge(&split(img).map(|p| edge_plane(&p, r)))
}

/// Canny edges, then Hough peaks that are maximal within a `width` (theta,
/// degrees) by `height` (rho, pixels) neighborhood, drawn as lines.
pub fn hough_lines(img: &NormalizedImage, width: usize, height: usize, threshold: u32) -> NormalizedImage {
    let (w, h) = (img.width(), img.height());
    let mask = canny_mask(img, 1.4, 0.1, 0.3);
    let lines = hough_peaks(&hough(&mask, w, h), width, height, threshold);
    mask_image(&render_lines(&lines, w, h), w, h)
}

/// White wherever a channel differs from its 3x3 median.
pub fn color_comp(img: &NormalizedImage) -> NormalizedImage {
    let med = median3(img);
    let mut px = Vec::with_capacity(img.raw_size());
    for (a, b) in img.pixels().zip(med.pixels()) {
        let v = if a != b { 255 } else { 0 };
        px.extend_from_slice(&[v, v, v]);
    }
    NormalizedImage::from_rgb(img.width(), img.height(), px)
}

/// Per-channel Sobel gradient magnitude.
pub fn color_conv(img: &NormalizedImage) -> NormalizedImage {
    merge(&split(img).map(|p| {
        let (gx, gy) = sobel(&p);
        gx.zip(&gy, |a, b| (a.hypot(b) / 4.0).min(1.0))
    }))
}

/// Local adaptive threshold: white where the pixel is not darker than its
/// neighborhood mean by more than `offset`.
pub fn edge_lat(img: &NormalizedImage, r: usize, offset: f32) -> NormalizedImage {
    let g = gray_plane(img);
    let m = box_mean(&g, r);
    gray_image(&g.zip(&m, |v, mean| if v >= mean - offset { 1.0 } else { 0.0 }))
}

/// Anti-diagonal emboss kernel: a Gaussian of `sigma` weighted positive on
/// one side of the center and negative on the other, normalized to unit sum.
fn emboss_kernel(r: usize, sigma: f64) -> Vec<f32> {
    let side = 2 * r + 1;
    let mut k = vec![0f64; side * side];
    let ri = r as isize;
    for j in -ri..=ri {
        for i in -ri..=ri {
            let g = (-((i * i + j * j) as f64) / (2.0 * sigma * sigma)).exp();
            let idx = ((j + ri) as usize) * side + (i + ri) as usize;
            k[idx] = if i == 0 && j == 0 {
                8.0 * g
            } else if i + j > 0 {
                -8.0 * g
            } else if i + j < 0 {
                8.0 * g
            } else {
                0.0
            };
        }
    }
    // keep the response DC-neutral around the positive center weight
    let s: f64 = k.iter().sum();
    let norm = if s.abs() > 1e-12 { s } else { 1.0 };
    k.into_iter().map(|v| (v / norm) as f32).collect()
}

fn emboss_plane(p: &Plane, r: usize, sigma: f64) -> Plane {
    equalize(&convolve2d(p, &emboss_kernel(r, sigma), r).map(|v| v.clamp(0.0, 1.0)))
}

pub fn emboss_gray(img: &NormalizedImage, r: usize, sigma: f64) -> NormalizedImage {
    gray_image(&emboss_plane(&gray_plane(img), r, sigma))
}

pub fn emboss_color(img: &NormalizedImage, r: usize, sigma: f64) -> NormalizedImage {
    merge(&split(img).map(|p| emboss_plane(&p, r, sigma)))
}

/// Derivative of a Gaussian along the main diagonal, offset to mid-gray.
pub fn emboss_dog(img: &NormalizedImage, sigma: f64, r: usize) -> NormalizedImage {
    let side = 2 * r + 1;
    let ri = r as isize;
    let mut k = vec![0f32; side * side];
    let mut norm = 0f64;
    for j in -ri..=ri {
        for i in -ri..=ri {
            let t = (i + j) as f64 / std::f64::consts::SQRT_2;
            let v = -t * (-((i * i + j * j) as f64) / (2.0 * sigma * sigma)).exp();
            norm += v.abs();
            k[((j + ri) as usize) * side + (i + ri) as usize] = v as f32;
        }
    }
    let k: Vec<f32> = k.iter().map(|&v| v / (norm as f32 / 2.0)).collect();
    let g = gray_plane(img);
    gray_image(&convolve2d(&g, &k, r).map(|v| (v + 0.5).clamp(0.0, 1.0)))
}

/// Diagonal Prewitt response, offset to mid-gray.
pub fn emboss_prewitt(img: &NormalizedImage) -> NormalizedImage {
    let k = [-1.0, -1.0, 0.0, -1.0, 0.0, 1.0, 0.0, 1.0, 1.0f32].map(|v| v / 3.0);
    let g = gray_plane(img);
    gray_image(&convolve2d(&g, &k, 1).map(|v| (v + 0.5).clamp(0.0, 1.0)))
}

/// HSL lightness shifted by the pixel's own intensity, then despeckled.
pub fn emboss_modulate(img: &NormalizedImage) -> NormalizedImage {
    use crate::color::{hsl_to_rgb, rgb_to_hsl};
    let shifted = super::color_ops::map_pixels(img, |p| {
        let u = [p[0] as f64 / 255.0, p[1] as f64 / 255.0, p[2] as f64 / 255.0];
        let i = (u[0] + u[1] + u[2]) / 3.0;
        let [h, s, l] = rgb_to_hsl(u);
        hsl_to_rgb([h, s, (l + i - 0.5).clamp(0.0, 1.0)])
    });
    median3(&shifted)
}
