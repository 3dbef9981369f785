//! Canny edge detection and the Hough line accumulator.

use super::ops::{gaussian_blur, sobel, Plane};

/// Binary edge mask from Gaussian smoothing, Sobel gradients, non-maximum
/// suppression and hysteresis at `lo * max` / `hi * max` gradient magnitude.
pub fn canny(gray: &Plane, sigma: f64, lo: f64, hi: f64) -> Vec<bool> {
    let (w, h) = (gray.w, gray.h);
    let smooth = gaussian_blur(gray, sigma);
    let (gx, gy) = sobel(&smooth);
    let mag: Vec<f32> = gx.v.iter().zip(&gy.v).map(|(&a, &b)| a.hypot(b)).collect();
    let max = mag.iter().copied().fold(0f32, f32::max);
    let mut out = vec![false; w * h];
    if max <= 1e-6 || w < 3 || h < 3 {
        return out;
    }
    let mut thin = vec![0f32; w * h];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let i = y * w + x;
            let m = mag[i];
            if m == 0.0 {
                continue;
            }
            let angle = (gy.v[i] as f64).atan2(gx.v[i] as f64).to_degrees();
            let a = if angle < 0.0 { angle + 180.0 } else { angle };
            // neighbor offsets along the gradient direction
            let (dx, dy): (isize, isize) = if !(22.5..157.5).contains(&a) {
                (1, 0)
            } else if a < 67.5 {
                (1, 1)
            } else if a < 112.5 {
                (0, 1)
            } else {
                (-1, 1)
            };
            let fwd = mag[(y as isize + dy) as usize * w + (x as isize + dx) as usize];
            let back = mag[(y as isize - dy) as usize * w + (x as isize - dx) as usize];
            if m > fwd && m >= back {
                thin[i] = m;
            }
        }
    }
    let (lo_t, hi_t) = (lo as f32 * max, hi as f32 * max);
    let mut stack: Vec<usize> = Vec::new();
    for (i, &m) in thin.iter().enumerate() {
        if m >= hi_t && !out[i] {
            out[i] = true;
            stack.push(i);
            while let Some(j) = stack.pop() {
                let (jx, jy) = ((j % w) as isize, (j / w) as isize);
                for ny in jy - 1..=jy + 1 {
                    for nx in jx - 1..=jx + 1 {
                        if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                            continue;
                        }
                        let k = ny as usize * w + nx as usize;
                        if !out[k] && thin[k] >= lo_t && thin[k] > 0.0 {
                            out[k] = true;
                            stack.push(k);
                        }
                    }
                }
            }
        }
    }
    out
}

pub const THETA_BINS: usize = 180;

/// Hough accumulator over (theta in whole degrees, integer rho).
pub struct HoughSpace {
    pub rho_max: isize,
    pub acc: Vec<u32>,
}

impl HoughSpace {
    pub fn rho_bins(&self) -> usize {
        (2 * self.rho_max + 1) as usize
    }

    #[inline]
    pub fn get(&self, theta: usize, rho_idx: usize) -> u32 {
        self.acc[theta * self.rho_bins() + rho_idx]
    }
}

fn trig() -> Vec<(f64, f64)> {
    (0..THETA_BINS).map(|t| ((t as f64).to_radians().cos(), (t as f64).to_radians().sin())).collect()
}

pub fn hough(mask: &[bool], w: usize, h: usize) -> HoughSpace {
    let rho_max = ((w * w + h * h) as f64).sqrt().ceil() as isize;
    let bins = (2 * rho_max + 1) as usize;
    let mut acc = vec![0u32; THETA_BINS * bins];
    let tab = trig();
    for y in 0..h {
        for x in 0..w {
            if !mask[y * w + x] {
                continue;
            }
            for (t, &(c, s)) in tab.iter().enumerate() {
                let rho = (x as f64 * c + y as f64 * s).round() as isize;
                acc[t * bins + (rho + rho_max) as usize] += 1;
            }
        }
    }
    HoughSpace { rho_max, acc }
}

/// A detected line in normal form: `x cos(theta) + y sin(theta) = rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoughLine {
    pub theta_deg: usize,
    pub rho: isize,
    pub votes: u32,
}

/// Accumulator peaks with at least `threshold` votes that are maximal within
/// a `win_theta` x `win_rho` neighborhood (theta wraps with rho negated).
pub fn hough_peaks(space: &HoughSpace, win_theta: usize, win_rho: usize, threshold: u32) -> Vec<HoughLine> {
    let bins = space.rho_bins();
    let ht = (win_theta / 2) as isize;
    let hr = (win_rho / 2) as isize;
    // theta-padded copy: row t < 0 is row t + 180 mirrored in rho, etc.
    let rows = THETA_BINS as isize + 2 * ht;
    let padded_row = |t: isize| -> (usize, bool) {
        if t < 0 {
            ((t + THETA_BINS as isize) as usize, true)
        } else if t >= THETA_BINS as isize {
            ((t - THETA_BINS as isize) as usize, true)
        } else {
            (t as usize, false)
        }
    };
    let mut padded = vec![0u32; rows as usize * bins];
    for pt in 0..rows {
        let (src, flip) = padded_row(pt - ht);
        for r in 0..bins {
            let sr = if flip { bins - 1 - r } else { r };
            padded[pt as usize * bins + r] = space.acc[src * bins + sr];
        }
    }
    // separable max: rho direction then theta direction
    let mut rmax = vec![0u32; padded.len()];
    for pt in 0..rows as usize {
        let row = &padded[pt * bins..(pt + 1) * bins];
        for r in 0..bins {
            let lo = (r as isize - hr).max(0) as usize;
            let hi = ((r as isize + hr) as usize).min(bins - 1);
            rmax[pt * bins + r] = *row[lo..=hi].iter().max().unwrap();
        }
    }
    let mut lines = Vec::new();
    for t in 0..THETA_BINS {
        for r in 0..bins {
            let v = space.acc[t * bins + r];
            if v < threshold || v == 0 {
                continue;
            }
            let pt = t as isize + ht;
            let local = (pt - ht..=pt + ht).map(|q| rmax[q as usize * bins + r]).max().unwrap();
            if v < local {
                continue;
            }
            // plateau: keep only the first cell (in theta-major order) holding the value
            let mut first = true;
            'scan: for dt in -ht..=ht {
                let (src_t, flip) = padded_row(t as isize + dt);
                for dr in -hr..=hr {
                    let rr = r as isize + dr;
                    if rr < 0 || rr >= bins as isize {
                        continue;
                    }
                    let pr = if flip { bins - 1 - rr as usize } else { rr as usize };
                    if (src_t, pr) < (t, r) && space.acc[src_t * bins + pr] == v {
                        first = false;
                        break 'scan;
                    }
                }
            }
            if first {
                lines.push(HoughLine { theta_deg: t, rho: r as isize - space.rho_max, votes: v });
            }
        }
    }
    lines
}

/// Draws lines (1 px, white) onto a black mask.
pub fn render_lines(lines: &[HoughLine], w: usize, h: usize) -> Vec<bool> {
    let mut out = vec![false; w * h];
    for l in lines {
        let th = (l.theta_deg as f64).to_radians();
        let (c, s) = (th.cos(), th.sin());
        if s.abs() > c.abs() {
            for x in 0..w {
                let y = ((l.rho as f64 - x as f64 * c) / s).round();
                if y >= 0.0 && (y as usize) < h {
                    out[y as usize * w + x] = true;
                }
            }
        } else {
            for y in 0..h {
                let x = ((l.rho as f64 - y as f64 * s) / c).round();
                if x >= 0.0 && (x as usize) < w {
                    out[y * w + x as usize] = true;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_has_no_edges() {
        let p = Plane { w: 30, h: 30, v: vec![0.4; 900] };
        assert!(canny(&p, 1.4, 0.1, 0.3).iter().all(|&e| !e));
    }

    #[test]
    fn step_edge_gives_single_column() {
        let (w, h) = (40, 30);
        let p = Plane { w, h, v: (0..w * h).map(|i| if i % w < w / 2 { 0.0 } else { 1.0 }).collect() };
        let e = canny(&p, 1.4, 0.1, 0.3);
        let cols: std::collections::BTreeSet<usize> = (0..w * h).filter(|&i| e[i]).map(|i| i % w).collect();
        assert_eq!(cols.len(), 1, "{cols:?}");
        let c = *cols.iter().next().unwrap();
        assert!(c == w / 2 - 1 || c == w / 2);
        // interior rows all marked
        for y in 1..h - 1 {
            assert!(e[y * w + c]);
        }
    }

    #[test]
    fn finds_horizontal_line() {
        let (w, h) = (60, 50);
        let mut m = vec![false; w * h];
        for x in 5..55 {
            m[20 * w + x] = true;
        }
        let space = hough(&m, w, h);
        let lines = hough_peaks(&space, 40, 40, 20);
        assert_eq!(lines.len(), 1);
        assert_eq!(lines[0].theta_deg, 90);
        assert_eq!(lines[0].rho, 20);
    }

    #[test]
    fn vertical_line_not_split_across_wrap() {
        let (w, h) = (60, 60);
        let mut m = vec![false; w * h];
        for y in 0..60 {
            m[y * w + 30] = true;
        }
        let lines = hough_peaks(&hough(&m, w, h), 40, 40, 20);
        assert_eq!(lines.len(), 1, "{lines:?}");
        assert_eq!(lines[0].theta_deg, 0);
    }
}
