//! Planar float rasters and the neighborhood filters the transform bank is
//! built from. Channel values live in [0, 1].

use crate::imageio::NormalizedImage;

/// One channel, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Plane {
    pub w: usize,
    pub h: usize,
    pub v: Vec<f32>,
}

impl Plane {
    pub fn new(w: usize, h: usize) -> Self {
        Plane { w, h, v: vec![0.0; w * h] }
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f32 {
        self.v[y * self.w + x]
    }

    #[inline]
    pub fn at_clamped(&self, x: isize, y: isize) -> f32 {
        let x = x.clamp(0, self.w as isize - 1) as usize;
        let y = y.clamp(0, self.h as isize - 1) as usize;
        self.v[y * self.w + x]
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Plane {
        Plane { w: self.w, h: self.h, v: self.v.iter().map(|&x| f(x)).collect() }
    }

    pub fn zip(&self, other: &Plane, f: impl Fn(f32, f32) -> f32) -> Plane {
        Plane { w: self.w, h: self.h, v: self.v.iter().zip(&other.v).map(|(&a, &b)| f(a, b)).collect() }
    }

    pub fn mean(&self) -> f64 {
        self.v.iter().map(|&x| x as f64).sum::<f64>() / self.v.len() as f64
    }
}

#[inline]
pub fn quantize_unit(v: f32) -> u8 {
    crate::imageio::to_u8(v as f64 * 255.0)
}

pub fn split(img: &NormalizedImage) -> [Plane; 3] {
    let (w, h) = (img.width(), img.height());
    let mut out = [Plane::new(w, h), Plane::new(w, h), Plane::new(w, h)];
    for (i, p) in img.pixels().enumerate() {
        for c in 0..3 {
            out[c].v[i] = p[c] as f32 / 255.0;
        }
    }
    out
}

pub fn merge(planes: &[Plane; 3]) -> NormalizedImage {
    let (w, h) = (planes[0].w, planes[0].h);
    let mut px = Vec::with_capacity(w * h * 3);
    for i in 0..w * h {
        for p in planes {
            px.push(quantize_unit(p.v[i]));
        }
    }
    NormalizedImage::from_rgb(w, h, px)
}

/// Gray plane replicated into RGB.
pub fn gray_image(p: &Plane) -> NormalizedImage {
    let mut px = Vec::with_capacity(p.v.len() * 3);
    for &v in &p.v {
        let q = quantize_unit(v);
        px.extend_from_slice(&[q, q, q]);
    }
    NormalizedImage::from_rgb(p.w, p.h, px)
}

/// Rec. 601 luma in integer arithmetic; exact on neutral pixels.
#[inline]
pub fn luma_u8(p: [u8; 3]) -> u8 {
    ((299 * p[0] as u32 + 587 * p[1] as u32 + 114 * p[2] as u32 + 500) / 1000) as u8
}

pub fn grayscale(img: &NormalizedImage) -> NormalizedImage {
    let mut px = Vec::with_capacity(img.raw_size());
    for p in img.pixels() {
        let g = luma_u8(p);
        px.extend_from_slice(&[g, g, g]);
    }
    NormalizedImage::from_rgb(img.width(), img.height(), px)
}

pub fn gray_plane(img: &NormalizedImage) -> Plane {
    Plane { w: img.width(), h: img.height(), v: img.pixels().map(|p| luma_u8(p) as f32 / 255.0).collect() }
}

pub fn gaussian_kernel(sigma: f64) -> Vec<f32> {
    let r = (3.0 * sigma).ceil().max(1.0) as isize;
    let mut k: Vec<f64> = (-r..=r).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k.into_iter().map(|v| v as f32).collect()
}

/// Separable convolution with a symmetric odd-length kernel, edges clamped.
pub fn convolve_separable(p: &Plane, k: &[f32]) -> Plane {
    let r = k.len() / 2;
    let (w, h) = (p.w, p.h);
    // horizontal pass over a clamped, padded copy of each row
    let mut tmp = Plane::new(w, h);
    let mut line = vec![0f32; w + 2 * r];
    for y in 0..h {
        let row = &p.v[y * w..(y + 1) * w];
        line[..r].fill(row[0]);
        line[r..r + w].copy_from_slice(row);
        line[r + w..].fill(row[w - 1]);
        let out = &mut tmp.v[y * w..(y + 1) * w];
        for (j, &kv) in k.iter().enumerate() {
            for (o, &s) in out.iter_mut().zip(&line[j..j + w]) {
                *o += kv * s;
            }
        }
    }
    // vertical pass accumulates whole rows
    let mut out = Plane::new(w, h);
    for y in 0..h {
        let dst = &mut out.v[y * w..(y + 1) * w];
        for (j, &kv) in k.iter().enumerate() {
            let sy = (y + j).saturating_sub(r).min(h - 1);
            for (o, &s) in dst.iter_mut().zip(&tmp.v[sy * w..(sy + 1) * w]) {
                *o += kv * s;
            }
        }
    }
    out
}

pub fn gaussian_blur(p: &Plane, sigma: f64) -> Plane {
    if sigma <= 0.0 {
        return p.clone();
    }
    convolve_separable(p, &gaussian_kernel(sigma))
}

pub fn blur_image(img: &NormalizedImage, sigma: f64) -> NormalizedImage {
    let planes = split(img);
    merge(&planes.map(|p| gaussian_blur(&p, sigma)))
}

/// Dense 2-D convolution with a (2r+1)^2 kernel, edges clamped.
pub fn convolve2d(p: &Plane, k: &[f32], r: usize) -> Plane {
    let side = 2 * r + 1;
    assert_eq!(k.len(), side * side);
    let (w, h) = (p.w, p.h);
    let pw = w + 2 * r;
    let mut pad = vec![0f32; pw * (h + 2 * r)];
    for py in 0..h + 2 * r {
        let sy = py.saturating_sub(r).min(h - 1);
        let row = &p.v[sy * w..(sy + 1) * w];
        let dst = &mut pad[py * pw..(py + 1) * pw];
        dst[..r].fill(row[0]);
        dst[r..r + w].copy_from_slice(row);
        dst[r + w..].fill(row[w - 1]);
    }
    let mut out = Plane::new(w, h);
    for y in 0..h {
        let dst = &mut out.v[y * w..(y + 1) * w];
        for ky in 0..side {
            let src = &pad[(y + ky) * pw..(y + ky + 1) * pw];
            for kx in 0..side {
                let kv = k[ky * side + kx];
                if kv == 0.0 {
                    continue;
                }
                for (o, &s) in dst.iter_mut().zip(&src[kx..kx + w]) {
                    *o += kv * s;
                }
            }
        }
    }
    out
}

/// Mean over the (2r+1)^2 window, truncated at the borders.
pub fn box_mean(p: &Plane, r: usize) -> Plane {
    let (w, h) = (p.w, p.h);
    let mut integral = vec![0f64; (w + 1) * (h + 1)];
    for y in 0..h {
        let mut row = 0f64;
        for x in 0..w {
            row += p.v[y * w + x] as f64;
            integral[(y + 1) * (w + 1) + x + 1] = integral[y * (w + 1) + x + 1] + row;
        }
    }
    let mut out = Plane::new(w, h);
    for y in 0..h {
        let (y0, y1) = (y.saturating_sub(r), (y + r + 1).min(h));
        for x in 0..w {
            let (x0, x1) = (x.saturating_sub(r), (x + r + 1).min(w));
            let s = integral[y1 * (w + 1) + x1] - integral[y0 * (w + 1) + x1] - integral[y1 * (w + 1) + x0]
                + integral[y0 * (w + 1) + x0];
            out.v[y * w + x] = (s / ((y1 - y0) * (x1 - x0)) as f64) as f32;
        }
    }
    out
}

/// Sobel derivatives (x, y), edges clamped.
pub fn sobel(p: &Plane) -> (Plane, Plane) {
    let mut gx = Plane::new(p.w, p.h);
    let mut gy = Plane::new(p.w, p.h);
    for y in 0..p.h as isize {
        for x in 0..p.w as isize {
            let a = |dx: isize, dy: isize| p.at_clamped(x + dx, y + dy);
            let sx = (a(1, -1) + 2.0 * a(1, 0) + a(1, 1)) - (a(-1, -1) + 2.0 * a(-1, 0) + a(-1, 1));
            let sy = (a(-1, 1) + 2.0 * a(0, 1) + a(1, 1)) - (a(-1, -1) + 2.0 * a(0, -1) + a(1, -1));
            let i = y as usize * p.w + x as usize;
            gx.v[i] = sx;
            gy.v[i] = sy;
        }
    }
    (gx, gy)
}

/// 3x3 median per channel on 8-bit data, edges clamped.
pub fn median3(img: &NormalizedImage) -> NormalizedImage {
    let (w, h) = (img.width(), img.height());
    let src = img.as_bytes();
    let stride = 3 * w;
    // rows padded by one pixel on each side
    let padded: Vec<Vec<u8>> = (0..h)
        .map(|y| {
            let row = &src[y * stride..(y + 1) * stride];
            let mut v = Vec::with_capacity(stride + 6);
            v.extend_from_slice(&row[..3]);
            v.extend_from_slice(row);
            v.extend_from_slice(&row[stride - 3..]);
            v
        })
        .collect();
    let mut out = vec![0u8; src.len()];
    let mut win: [Vec<u8>; 9] = std::array::from_fn(|_| vec![0u8; stride]);
    for y in 0..h {
        let rows = [&padded[y.saturating_sub(1)], &padded[y], &padded[(y + 1).min(h - 1)]];
        for (i, w9) in win.iter_mut().enumerate() {
            let off = 3 * (i % 3);
            w9.copy_from_slice(&rows[i / 3][off..off + stride]);
        }
        median9_network(&mut win);
        out[y * stride..(y + 1) * stride].copy_from_slice(&win[4]);
    }
    NormalizedImage::from_rgb(w, h, out)
}

/// Element-wise median of nine equal-length lanes, left in lane 4.
fn median9_network(v: &mut [Vec<u8>; 9]) {
    const PAIRS: [(usize, usize); 19] = [
        (1, 2), (4, 5), (7, 8), (0, 1), (3, 4), (6, 7), (1, 2), (4, 5), (7, 8),
        (0, 3), (5, 8), (4, 7), (3, 6), (1, 4), (2, 5), (4, 7), (4, 2), (6, 4), (4, 2),
    ];
    for (a, b) in PAIRS {
        let (lo, hi) = if a < b { let (l, r) = v.split_at_mut(b); (&mut l[a], &mut r[0]) } else {
            let (l, r) = v.split_at_mut(a);
            (&mut r[0], &mut l[b])
        };
        for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
            let (mn, mx) = ((*x).min(*y), (*x).max(*y));
            *x = mn;
            *y = mx;
        }
    }
}

pub fn dilate(img: &NormalizedImage, r: usize) -> NormalizedImage {
    let (w, h) = (img.width(), img.height());
    let src = img.as_bytes();
    let mut tmp = vec![0u8; src.len()];
    for y in 0..h {
        for x in 0..w {
            let (x0, x1) = (x.saturating_sub(r), (x + r).min(w - 1));
            for c in 0..3 {
                tmp[(y * w + x) * 3 + c] = (x0..=x1).map(|xx| src[(y * w + xx) * 3 + c]).max().unwrap();
            }
        }
    }
    let mut out = vec![0u8; src.len()];
    for y in 0..h {
        let (y0, y1) = (y.saturating_sub(r), (y + r).min(h - 1));
        for x in 0..w {
            for c in 0..3 {
                out[(y * w + x) * 3 + c] = (y0..=y1).map(|yy| tmp[(yy * w + x) * 3 + c]).max().unwrap();
            }
        }
    }
    NormalizedImage::from_rgb(w, h, out)
}

/// Histogram equalization of one 8-bit channel.
pub fn equalize(p: &Plane) -> Plane {
    let q: Vec<u8> = p.v.iter().map(|&v| quantize_unit(v)).collect();
    let mut hist = [0u64; 256];
    for &v in &q {
        hist[v as usize] += 1;
    }
    let n = q.len() as f64;
    let mut cdf = [0f64; 256];
    let mut acc = 0u64;
    for i in 0..256 {
        acc += hist[i];
        cdf[i] = acc as f64;
    }
    let cmin = cdf.iter().copied().find(|&c| c > 0.0).unwrap_or(0.0);
    let denom = n - cmin;
    let v = q
        .iter()
        .map(|&v| if denom <= 0.0 { v as f32 / 255.0 } else { ((cdf[v as usize] - cmin) / denom) as f32 })
        .collect();
    Plane { w: p.w, h: p.h, v }
}

/// Bilinear sample with clamped edges.
pub fn bilinear(p: &Plane, x: f64, y: f64) -> f32 {
    let x = x.clamp(0.0, (p.w - 1) as f64);
    let y = y.clamp(0.0, (p.h - 1) as f64);
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(p.w - 1), (y0 + 1).min(p.h - 1));
    let (fx, fy) = ((x - x0 as f64) as f32, (y - y0 as f64) as f32);
    let top = p.at(x0, y0) * (1.0 - fx) + p.at(x1, y0) * fx;
    let bot = p.at(x0, y1) * (1.0 - fx) + p.at(x1, y1) * fx;
    top * (1.0 - fy) + bot * fy
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blur_keeps_constant_exact() {
        let img = NormalizedImage::filled(40, 30, [17, 130, 250]);
        assert_eq!(blur_image(&img, 10.0), img);
        assert_eq!(blur_image(&img, 30.0), img);
    }

    #[test]
    fn box_mean_of_constant() {
        let p = Plane { w: 9, h: 7, v: vec![0.25; 63] };
        assert!(box_mean(&p, 3).v.iter().all(|&v| (v - 0.25).abs() < 1e-7));
    }

    #[test]
    fn luma_is_exact_on_neutrals() {
        for v in 0..=255u8 {
            assert_eq!(luma_u8([v, v, v]), v);
        }
    }

    #[test]
    fn median_removes_speck() {
        let mut img = NormalizedImage::filled(5, 5, [0, 0, 0]);
        img.put(2, 2, [255, 255, 255]);
        assert_eq!(median3(&img), NormalizedImage::filled(5, 5, [0, 0, 0]));
    }

    #[test]
    fn dilate_grows_point() {
        let mut img = NormalizedImage::filled(7, 7, [0, 0, 0]);
        img.put(3, 3, [200, 0, 0]);
        let d = dilate(&img, 1);
        assert_eq!(d.pixels().filter(|p| p[0] == 200).count(), 9);
    }

    fn noisy(w: usize, h: usize, seed: u64) -> NormalizedImage {
        let mut s = seed | 1;
        NormalizedImage::from_fn(w, h, |_, _| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            [s as u8, (s >> 8) as u8, (s >> 16) as u8]
        })
    }

    #[test]
    fn median_matches_sorting_oracle() {
        let img = noisy(13, 9, 7);
        let m = median3(&img);
        for y in 0..9isize {
            for x in 0..13isize {
                for c in 0..3 {
                    let mut win = Vec::new();
                    for dy in -1..=1 {
                        for dx in -1..=1 {
                            let (xx, yy) = ((x + dx).clamp(0, 12) as usize, (y + dy).clamp(0, 8) as usize);
                            win.push(img.get(xx, yy)[c]);
                        }
                    }
                    win.sort();
                    assert_eq!(m.get(x as usize, y as usize)[c], win[4]);
                }
            }
        }
    }

    #[test]
    fn convolutions_match_direct_sums() {
        let img = noisy(11, 8, 3);
        let p = gray_plane(&img);
        let k1 = gaussian_kernel(1.2);
        let r = k1.len() / 2;
        let k2: Vec<f32> = (0..k1.len() * k1.len()).map(|i| k1[i / k1.len()] * k1[i % k1.len()]).collect();
        let a = convolve_separable(&p, &k1);
        let b = convolve2d(&p, &k2, r);
        for y in 0..8isize {
            for x in 0..11isize {
                let mut acc = 0f64;
                for dy in -(r as isize)..=r as isize {
                    for dx in -(r as isize)..=r as isize {
                        let kv = k1[(dy + r as isize) as usize] as f64 * k1[(dx + r as isize) as usize] as f64;
                        acc += kv * p.at_clamped(x + dx, y + dy) as f64;
                    }
                }
                let i = y as usize * 11 + x as usize;
                assert!((a.v[i] as f64 - acc).abs() < 1e-4);
                assert!((b.v[i] as f64 - acc).abs() < 1e-4);
            }
        }
    }
}
