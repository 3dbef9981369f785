//! Decoding and pixel-count normalization of input images.
//!
//! Every downstream stage operates on [`NormalizedImage`]: a packed, row-major
//! RGB8 raster. Sources larger than the target pixel count are box-filtered
//! down to it (aspect preserved), smaller ones are kept at native size, and
//! anything below half the target is rejected.

use std::path::Path;

use image::{DynamicImage, GenericImageView};
use thiserror::Error;

/// Default normalization target (400x400 for square sources).
pub const TARGET_PIXELS: usize = 160_000;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("cannot decode image: {0}")]
    Decode(String),
    #[error("image has {pixels} pixels, below the minimum of {min}")]
    TooSmall { pixels: usize, min: usize },
    #[error("image has a zero dimension ({width}x{height})")]
    ZeroDimension { width: usize, height: usize },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Packed RGB8 raster, row-major, 3 bytes per pixel.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct NormalizedImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for NormalizedImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NormalizedImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl NormalizedImage {
    /// Wraps an RGB8 buffer. Panics if the buffer length does not match.
    pub fn from_rgb(width: usize, height: usize, pixels: Vec<u8>) -> Self {
        assert_eq!(pixels.len(), width * height * 3, "pixel buffer length mismatch");
        NormalizedImage { width, height, pixels }
    }

    pub fn try_from_rgb(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::ZeroDimension { width, height });
        }
        if pixels.len() != width * height * 3 {
            return Err(ImageError::Decode(format!(
                "buffer of {} bytes does not hold {}x{} RGB pixels",
                pixels.len(),
                width,
                height
            )));
        }
        Ok(NormalizedImage { width, height, pixels })
    }

    /// A single-color raster.
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        let mut pixels = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            pixels.extend_from_slice(&rgb);
        }
        NormalizedImage { width, height, pixels }
    }

    /// Builds a raster by evaluating `f(x, y)` for every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Self {
        let mut pixels = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                pixels.extend_from_slice(&f(x, y));
            }
        }
        NormalizedImage { width, height, pixels }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// Raw bitmap payload size `f` in bytes (`width * height * 3`).
    pub fn raw_size(&self) -> usize {
        self.pixels.len()
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.pixels
    }

    pub fn as_bytes_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    #[inline]
    pub fn put(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.pixels.chunks_exact(3).map(|p| [p[0], p[1], p[2]])
    }

    /// True when every pixel has R == G == B.
    pub fn is_gray(&self) -> bool {
        self.pixels().all(|[r, g, b]| r == g && g == b)
    }
}

/// Decodes a file and normalizes it.
pub fn load_path(path: &Path, target_pixels: usize) -> Result<NormalizedImage, ImageError> {
    let bytes = std::fs::read(path)?;
    load_and_normalize(&bytes, target_pixels)
}

/// Decodes PNG, JPEG, GIF (first frame) or BMP bytes and normalizes the result.
pub fn load_and_normalize(bytes: &[u8], target_pixels: usize) -> Result<NormalizedImage, ImageError> {
    let decoded = decode_rgb(bytes)?;
    normalize(decoded, target_pixels)
}

/// Decodes to RGB8, compositing any alpha channel over white.
pub fn decode_rgb(bytes: &[u8]) -> Result<NormalizedImage, ImageError> {
    let dynimg = image::load_from_memory(bytes).map_err(|e| ImageError::Decode(e.to_string()))?;
    let (w, h) = dynimg.dimensions();
    let (w, h) = (w as usize, h as usize);
    if w == 0 || h == 0 {
        return Err(ImageError::ZeroDimension { width: w, height: h });
    }
    let pixels = match dynimg {
        DynamicImage::ImageRgb8(buf) => buf.into_raw(),
        DynamicImage::ImageLuma8(buf) => buf.into_raw().into_iter().flat_map(|v| [v, v, v]).collect(),
        other => {
            let rgba = other.to_rgba8();
            let mut out = Vec::with_capacity(w * h * 3);
            for px in rgba.pixels() {
                let a = px[3] as u32;
                for c in 0..3 {
                    // over white: c*a + 255*(255-a), rounded
                    let v = px[c] as u32 * a + 255 * (255 - a);
                    out.push(((v + 127) / 255) as u8);
                }
            }
            out
        }
    };
    Ok(NormalizedImage::from_rgb(w, h, pixels))
}

/// Downscales `img` so its pixel count is as close as possible to (but not
/// above) `target_pixels`. Images already within the target are returned as-is.
pub fn normalize(img: NormalizedImage, target_pixels: usize) -> Result<NormalizedImage, ImageError> {
    let (w, h) = (img.width, img.height);
    if w == 0 || h == 0 {
        return Err(ImageError::ZeroDimension { width: w, height: h });
    }
    let n = w * h;
    let min = target_pixels / 2 + target_pixels % 2;
    if n < min {
        return Err(ImageError::TooSmall { pixels: n, min });
    }
    if n <= target_pixels {
        return Ok(img);
    }
    let (nw, nh) = normalized_dims(w, h, target_pixels);
    Ok(resample_box(&img, nw, nh))
}

/// Target dimensions for a `w`x`h` source: `round(s*w) x round(s*h)` with
/// `s = sqrt(target / (w*h))`, stepping down to the nearest floor/ceil
/// combination when rounding would overshoot the target.
pub fn normalized_dims(w: usize, h: usize, target_pixels: usize) -> (usize, usize) {
    let s = (target_pixels as f64 / (w * h) as f64).sqrt();
    let (ew, eh) = (s * w as f64, s * h as f64);
    let (rw, rh) = (round_half_away(ew).max(1.0) as usize, round_half_away(eh).max(1.0) as usize);
    if rw * rh <= target_pixels {
        return (rw, rh);
    }
    let mut best: Option<(usize, usize)> = None;
    for cw in [ew.floor(), ew.ceil()] {
        for ch in [eh.floor(), eh.ceil()] {
            let (cw, ch) = (cw.max(1.0) as usize, ch.max(1.0) as usize);
            if cw * ch > target_pixels {
                continue;
            }
            let better = match best {
                None => true,
                Some((bw, bh)) => cw * ch > bw * bh,
            };
            if better {
                best = Some((cw, ch));
            }
        }
    }
    best.unwrap_or((ew.floor().max(1.0) as usize, eh.floor().max(1.0) as usize))
}

/// Rounds half away from zero.
#[inline]
pub fn round_half_away(v: f64) -> f64 {
    v.round()
}

/// Clamps and rounds a float channel value to u8.
#[inline]
pub fn to_u8(v: f64) -> u8 {
    if v.is_nan() {
        0
    } else {
        v.round().clamp(0.0, 255.0) as u8
    }
}

/// Rotates clockwise by 90 degrees.
pub fn rotate90(img: &NormalizedImage) -> NormalizedImage {
    let (w, h) = (img.width, img.height);
    let mut out = vec![0u8; img.pixels.len()];
    // output is h wide, w tall; out(x', y') = in(y', h-1-x')
    for y in 0..h {
        let src_row = &img.pixels[y * w * 3..(y + 1) * w * 3];
        let xo = h - 1 - y;
        for x in 0..w {
            let o = (x * h + xo) * 3;
            out[o..o + 3].copy_from_slice(&src_row[x * 3..x * 3 + 3]);
        }
    }
    NormalizedImage { width: h, height: w, pixels: out }
}

/// Resizes both dimensions by `frac` with a box filter; `frac == 1` copies.
pub fn resize_fraction(img: &NormalizedImage, frac: f64) -> Result<NormalizedImage, ImageError> {
    if !(frac > 0.0 && frac <= 1.0) {
        return Err(ImageError::Decode(format!("resize fraction {frac} outside (0, 1]")));
    }
    if frac == 1.0 {
        return Ok(img.clone());
    }
    let nw = round_half_away(frac * img.width as f64) as usize;
    let nh = round_half_away(frac * img.height as f64) as usize;
    if nw == 0 || nh == 0 {
        return Err(ImageError::ZeroDimension { width: nw, height: nh });
    }
    Ok(resample_box(img, nw, nh))
}

/// Area-averaging resample (exact fractional box coverage). Intended for
/// downscaling; upscaling degenerates to nearest-ish interpolation.
pub fn resample_box(img: &NormalizedImage, nw: usize, nh: usize) -> NormalizedImage {
    if nw == img.width && nh == img.height {
        return img.clone();
    }
    let xw = box_weights(img.width, nw);
    let yw = box_weights(img.height, nh);
    // horizontal pass into f64 buffer of nw x height
    let mut tmp = vec![0f64; nw * img.height * 3];
    for y in 0..img.height {
        let row = &img.pixels[y * img.width * 3..(y + 1) * img.width * 3];
        for (ox, taps) in xw.iter().enumerate() {
            let mut acc = [0f64; 3];
            for &(sx, wgt) in taps {
                for c in 0..3 {
                    acc[c] += wgt * row[sx * 3 + c] as f64;
                }
            }
            let o = (y * nw + ox) * 3;
            tmp[o..o + 3].copy_from_slice(&acc);
        }
    }
    let mut out = vec![0u8; nw * nh * 3];
    for (oy, taps) in yw.iter().enumerate() {
        for ox in 0..nw {
            let mut acc = [0f64; 3];
            for &(sy, wgt) in taps {
                let i = (sy * nw + ox) * 3;
                for c in 0..3 {
                    acc[c] += wgt * tmp[i + c];
                }
            }
            let o = (oy * nw + ox) * 3;
            for c in 0..3 {
                out[o + c] = to_u8(acc[c]);
            }
        }
    }
    NormalizedImage { width: nw, height: nh, pixels: out }
}

/// For each output index, the (source index, normalized weight) taps covering it.
fn box_weights(src: usize, dst: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|o| {
            let lo = o as f64 * scale;
            let hi = ((o + 1) as f64 * scale).min(src as f64);
            let mut taps = Vec::new();
            let mut s = lo.floor() as usize;
            let mut total = 0.0;
            while (s as f64) < hi && s < src {
                let a = lo.max(s as f64);
                let b = hi.min((s + 1) as f64);
                let wgt = b - a;
                if wgt > 0.0 {
                    taps.push((s, wgt));
                    total += wgt;
                }
                s += 1;
            }
            if taps.is_empty() {
                let s = (lo.floor() as usize).min(src - 1);
                taps.push((s, 1.0));
                total = 1.0;
            }
            for t in &mut taps {
                t.1 /= total;
            }
            taps
        })
        .collect()
}
