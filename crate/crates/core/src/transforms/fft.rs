//! 2-D Fourier transform rendered as magnitude and phase images.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::ops::gray_plane;
use crate::imageio::{to_u8, NormalizedImage};

/// Magnitude (log-scaled, min-max stretched) and phase images of the
/// centered spectrum. The grayscale input is padded with its mean to the
/// smallest enclosing square.
pub fn fft_pair(img: &NormalizedImage) -> (NormalizedImage, NormalizedImage) {
    let gray = gray_plane(img);
    let n = gray.w.max(gray.h);
    let mean = gray.mean();
    let mut data = vec![Complex64::new(mean, 0.0); n * n];
    for y in 0..gray.h {
        for x in 0..gray.w {
            data[y * n + x] = Complex64::new(gray.at(x, y) as f64, 0.0);
        }
    }
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    for row in data.chunks_exact_mut(n) {
        fft.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for x in 0..n {
        for y in 0..n {
            col[y] = data[y * n + x];
        }
        fft.process(&mut col);
        for y in 0..n {
            data[y * n + x] = col[y];
        }
    }
    // centered: output (x, y) holds frequency (x - n/2, y - n/2)
    let shift = |i: usize| (i + n - n / 2) % n;
    let mut logmag = vec![0f64; n * n];
    let mut phase = vec![0f64; n * n];
    for y in 0..n {
        for x in 0..n {
            let c = data[shift(y) * n + shift(x)];
            let m = c.norm();
            logmag[y * n + x] = m.ln_1p();
            // sub-epsilon coefficients carry no phase
            phase[y * n + x] = if m < 1e-9 { 0.0 } else { c.im.atan2(c.re) };
        }
    }
    let (lo, hi) = logmag.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = hi - lo;
    let mut mag_px = Vec::with_capacity(n * n * 3);
    let mut ph_px = Vec::with_capacity(n * n * 3);
    for i in 0..n * n {
        let m = if span > 1e-12 { to_u8((logmag[i] - lo) / span * 255.0) } else { 0 };
        mag_px.extend_from_slice(&[m, m, m]);
        let p = to_u8((phase[i] + PI) / (2.0 * PI) * 255.0);
        ph_px.extend_from_slice(&[p, p, p]);
    }
    (NormalizedImage::from_rgb(n, n, mag_px), NormalizedImage::from_rgb(n, n, ph_px))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_gives_single_dc_peak() {
        let img = NormalizedImage::filled(32, 20, [90, 90, 90]);
        let (mag, _) = fft_pair(&img);
        assert_eq!((mag.width(), mag.height()), (32, 32));
        for y in 0..32 {
            for x in 0..32 {
                let v = mag.get(x, y)[0];
                if (x, y) == (16, 16) {
                    assert_eq!(v, 255);
                } else {
                    assert_eq!(v, 0, "({x},{y})");
                }
            }
        }
    }

    #[test]
    fn sinusoid_gives_symmetric_horizontal_peaks() {
        let n = 64;
        let period = 8.0;
        let img = NormalizedImage::from_fn(n, n, |x, _| {
            let v = 127.5 + 100.0 * (2.0 * PI * x as f64 / period).cos();
            [v.round() as u8; 3]
        });
        let (mag, _) = fft_pair(&img);
        let mut px: Vec<(u8, usize, usize)> =
            (0..n).flat_map(|y| (0..n).map(move |x| (y, x))).map(|(y, x)| (mag.get(x, y)[0], x, y)).collect();
        px.sort_by(|a, b| b.0.cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
        let top: std::collections::BTreeSet<(usize, usize)> = px[..3].iter().map(|&(_, x, y)| (x, y)).collect();
        let k = (n as f64 / period) as usize;
        let expect: std::collections::BTreeSet<(usize, usize)> =
            [(n / 2, n / 2), (n / 2 - k, n / 2), (n / 2 + k, n / 2)].into_iter().collect();
        assert_eq!(top, expect);
    }

    #[test]
    fn pads_to_square() {
        let img = NormalizedImage::from_fn(30, 12, |x, y| [(x * 8) as u8, (y * 20) as u8, 0]);
        let (m, p) = fft_pair(&img);
        assert_eq!((m.width(), m.height()), (30, 30));
        assert_eq!((p.width(), p.height()), (30, 30));
    }
}
