//! Morphological and block-structure effects.

use super::ops::{dilate, luma_u8, median3};
use crate::imageio::{round_half_away, NormalizedImage};

/// Each `factor x factor` block (partial at the right and bottom edges)
/// replaced by its mean color.
pub fn pixelate(img: &NormalizedImage, factor: usize) -> NormalizedImage {
    let (w, h) = (img.width(), img.height());
    let f = factor.max(1);
    let mut out = img.clone();
    for by in (0..h).step_by(f) {
        for bx in (0..w).step_by(f) {
            let (x1, y1) = ((bx + f).min(w), (by + f).min(h));
            let mut sum = [0u64; 3];
            for y in by..y1 {
                for x in bx..x1 {
                    let p = img.get(x, y);
                    for c in 0..3 {
                        sum[c] += p[c] as u64;
                    }
                }
            }
            let n = ((x1 - bx) * (y1 - by)) as f64;
            let mean = sum.map(|s| round_half_away(s as f64 / n) as u8);
            for y in by..y1 {
                for x in bx..x1 {
                    out.put(x, y, mean);
                }
            }
        }
    }
    out
}

/// Repeated 3x3 median.
pub fn despeckle(img: &NormalizedImage, iterations: usize) -> NormalizedImage {
    let mut cur = img.clone();
    for _ in 0..iterations {
        cur = median3(&cur);
    }
    cur
}

/// Square dilation.
pub fn squares(img: &NormalizedImage, r: usize) -> NormalizedImage {
    dilate(img, r)
}

/// Neighborhood mode filter on intensity. Each pixel takes the color of the
/// first window pixel (row-major) whose intensity is the most frequent one;
/// ties in frequency go to the lower intensity.
pub fn oilpaint(img: &NormalizedImage, r: usize) -> NormalizedImage {
    let (w, h) = (img.width(), img.height());
    let luma: Vec<u8> = img.pixels().map(luma_u8).collect();
    let mut out = img.clone();
    let mut hist = [0u16; 256];
    for y in 0..h {
        let (y0, y1) = (y.saturating_sub(r), (y + r).min(h - 1));
        for x in 0..w {
            let (x0, x1) = (x.saturating_sub(r), (x + r).min(w - 1));
            hist.fill(0);
            for yy in y0..=y1 {
                for &l in &luma[yy * w + x0..=yy * w + x1] {
                    hist[l as usize] += 1;
                }
            }
            let mut mode = 0usize;
            for v in 1..256 {
                if hist[v] > hist[mode] {
                    mode = v;
                }
            }
            'find: for yy in y0..=y1 {
                for xx in x0..=x1 {
                    if luma[yy * w + xx] as usize == mode {
                        out.put(x, y, img.get(xx, yy));
                        break 'find;
                    }
                }
            }
        }
    }
    out
}
