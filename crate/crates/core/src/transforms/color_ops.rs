//! Pixelwise color arithmetic. Channels are taken to [0, 1], transformed,
//! clamped and requantized.

use std::f64::consts::FRAC_2_PI;

use crate::codecs::quantize::quantize_image;
use crate::color::{hsl_to_rgb, lab_to_lch, lab_to_rgb, lch_to_lab, rgb_to_hsl, rgb_to_lab, CHROMA_MAX};
use crate::imageio::{to_u8, NormalizedImage};

#[inline]
fn unit_to_u8(v: f64) -> u8 {
    to_u8(v.clamp(0.0, 1.0) * 255.0)
}

/// Applies the same scalar function to every channel through a lookup table.
pub fn map_channels(img: &NormalizedImage, f: impl Fn(f64) -> f64) -> NormalizedImage {
    let lut: Vec<u8> = (0..256).map(|v| unit_to_u8(f(v as f64 / 255.0))).collect();
    let px = img.as_bytes().iter().map(|&v| lut[v as usize]).collect();
    NormalizedImage::from_rgb(img.width(), img.height(), px)
}

/// Applies a function of the whole pixel.
pub fn map_pixels(img: &NormalizedImage, f: impl Fn([u8; 3]) -> [f64; 3]) -> NormalizedImage {
    let mut px = Vec::with_capacity(img.raw_size());
    let mut last: Option<([u8; 3], [u8; 3])> = None;
    for p in img.pixels() {
        let q = match last {
            Some((k, v)) if k == p => v,
            _ => {
                let o = f(p);
                let v = [unit_to_u8(o[0]), unit_to_u8(o[1]), unit_to_u8(o[2])];
                last = Some((p, v));
                v
            }
        };
        px.extend_from_slice(&q);
    }
    NormalizedImage::from_rgb(img.width(), img.height(), px)
}

#[inline]
fn unit(p: [u8; 3]) -> [f64; 3] {
    [p[0] as f64 / 255.0, p[1] as f64 / 255.0, p[2] as f64 / 255.0]
}

pub fn acos(img: &NormalizedImage) -> NormalizedImage {
    map_channels(img, |v| v.acos() * FRAC_2_PI)
}

pub fn pow10(img: &NormalizedImage) -> NormalizedImage {
    map_channels(img, |v| v.powi(10))
}

pub fn sqrt(img: &NormalizedImage) -> NormalizedImage {
    map_channels(img, f64::sqrt)
}

pub fn round(img: &NormalizedImage) -> NormalizedImage {
    map_channels(img, f64::round)
}

/// Pixelwise `k * v`, clamped; `k = 2` is the add-composite of an image with itself.
pub fn self_add(img: &NormalizedImage, k: f64) -> NormalizedImage {
    map_channels(img, |v| k * v)
}

/// Scales HSL lightness.
pub fn brightness(img: &NormalizedImage, factor: f64) -> NormalizedImage {
    map_pixels(img, |p| {
        let [h, s, l] = rgb_to_hsl(unit(p));
        hsl_to_rgb([h, s, (l * factor).clamp(0.0, 1.0)])
    })
}

/// Scales HSL saturation.
pub fn saturate(img: &NormalizedImage, factor: f64) -> NormalizedImage {
    map_pixels(img, |p| {
        let [h, s, l] = rgb_to_hsl(unit(p));
        hsl_to_rgb([h, (s * factor).clamp(0.0, 1.0), l])
    })
}

/// Normalized (lightness, chroma) of a pixel.
#[inline]
fn lc(p: [u8; 3]) -> (f64, f64) {
    let lch = lab_to_lch(rgb_to_lab(p));
    (lch[0] / 100.0, (lch[1] / CHROMA_MAX).min(1.0))
}

/// Each channel divided by normalized chroma; zero chroma saturates to white.
pub fn chroma_divide(img: &NormalizedImage) -> NormalizedImage {
    map_pixels(img, |p| {
        let (_, c) = lc(p);
        let u = unit(p);
        if c <= 0.0 {
            [1.0; 3]
        } else {
            u.map(|v| v / c)
        }
    })
}

/// Lab chroma rounded to either zero or full, keeping lightness and hue.
pub fn round_chroma(img: &NormalizedImage) -> NormalizedImage {
    map_pixels(img, |p| {
        let lch = lab_to_lch(rgb_to_lab(p));
        let c = if (lch[1] / CHROMA_MAX).round() == 0.0 { 0.0 } else { CHROMA_MAX };
        lab_to_rgb(lch_to_lab([lch[0], c, lch[2]]))
    })
}

/// Each channel divided by normalized lightness; zero lightness saturates to white.
pub fn luminance_divide(img: &NormalizedImage) -> NormalizedImage {
    map_pixels(img, |p| {
        let (l, _) = lc(p);
        let u = unit(p);
        if l <= 0.0 {
            [1.0; 3]
        } else {
            u.map(|v| v / l)
        }
    })
}

/// Linear-light composite of the lightness channel onto the image.
pub fn luminance_lighten(img: &NormalizedImage) -> NormalizedImage {
    map_pixels(img, |p| {
        let (l, _) = lc(p);
        unit(p).map(|v| v + 2.0 * l - 1.0)
    })
}

/// Darker of each channel and its negative, then the mean intensity as gray.
pub fn darken_intensity(img: &NormalizedImage) -> NormalizedImage {
    map_pixels(img, |p| {
        let g = unit(p).iter().map(|&v| v.min(1.0 - v)).sum::<f64>() / 3.0;
        [g, g, g]
    })
}

/// Median-cut quantization to at most `n` colors.
pub fn quantize_colors(img: &NormalizedImage, n: usize) -> NormalizedImage {
    quantize_image(img, n)
}

/// Luma threshold at mid-gray.
pub fn bilevel(img: &NormalizedImage) -> NormalizedImage {
    let mut px = Vec::with_capacity(img.raw_size());
    for p in img.pixels() {
        let v = if super::ops::luma_u8(p) >= 128 { 255 } else { 0 };
        px.extend_from_slice(&[v, v, v]);
    }
    NormalizedImage::from_rgb(img.width(), img.height(), px)
}

/// Floyd-Steinberg dithered black and white.
pub fn bilevel_dither(img: &NormalizedImage) -> NormalizedImage {
    let (w, h) = (img.width(), img.height());
    let mut buf: Vec<f32> = img.pixels().map(|p| super::ops::luma_u8(p) as f32).collect();
    let mut px = vec![0u8; w * h * 3];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let old = buf[i];
            let new = if old >= 128.0 { 255.0 } else { 0.0 };
            let err = old - new;
            px[i * 3..i * 3 + 3].fill(new as u8);
            if x + 1 < w {
                buf[i + 1] += err * 7.0 / 16.0;
            }
            if y + 1 < h {
                if x > 0 {
                    buf[i + w - 1] += err * 3.0 / 16.0;
                }
                buf[i + w] += err * 5.0 / 16.0;
                if x + 1 < w {
                    buf[i + w + 1] += err * 1.0 / 16.0;
                }
            }
        }
    }
    NormalizedImage::from_rgb(w, h, px)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn distinct(img: &NormalizedImage) -> usize {
        img.pixels().collect::<std::collections::BTreeSet<_>>().len()
    }

    #[test]
    fn channel_maps_on_endpoints() {
        let img = NormalizedImage::from_fn(2, 1, |x, _| if x == 0 { [0, 0, 0] } else { [255, 255, 255] });
        assert_eq!(acos(&img).get(0, 0), [255; 3]);
        assert_eq!(acos(&img).get(1, 0), [0; 3]);
        assert_eq!(pow10(&img), img);
        assert_eq!(sqrt(&img), img);
        assert_eq!(round(&img), img);
    }

    #[test]
    fn round_is_bilevel_per_channel() {
        let img = NormalizedImage::from_fn(16, 16, |x, y| [(x * 16) as u8, (y * 16) as u8, 100]);
        assert!(round(&img).as_bytes().iter().all(|&v| v == 0 || v == 255));
    }

    #[test]
    fn saturate_makes_colors_vivid() {
        let img = NormalizedImage::filled(4, 4, [150, 120, 110]);
        let out = saturate(&img, 51.0);
        let p = out.get(0, 0);
        assert!(p.contains(&255) || p.contains(&0), "{p:?}");
        let gray = NormalizedImage::filled(4, 4, [90, 90, 90]);
        assert_eq!(saturate(&gray, 51.0), gray);
    }

    #[test]
    fn brightness_clamps_to_white() {
        let img = NormalizedImage::filled(2, 2, [200, 200, 200]);
        assert_eq!(brightness(&img, 4.0).get(0, 0), [255; 3]);
    }

    #[test]
    fn gray_has_no_chroma() {
        let img = NormalizedImage::filled(2, 2, [77, 77, 77]);
        assert_eq!(chroma_divide(&img).get(0, 0), [255; 3]);
        assert_eq!(round_chroma(&img).get(0, 0), [77; 3]);
    }

    #[test]
    fn darken_intensity_of_extremes_is_black() {
        let img = NormalizedImage::from_fn(2, 1, |x, _| if x == 0 { [0, 255, 0] } else { [255, 255, 255] });
        assert_eq!(darken_intensity(&img).get(0, 0), [0; 3]);
        assert_eq!(darken_intensity(&img).get(1, 0), [0; 3]);
    }

    #[test]
    fn bilevel_variants_are_two_tone_and_idempotent() {
        let img = NormalizedImage::from_fn(30, 20, |x, y| [(x * 8) as u8, (y * 12) as u8, ((x + y) * 5) as u8]);
        for f in [bilevel, bilevel_dither] {
            let once = f(&img);
            assert!(distinct(&once) <= 2);
            assert_eq!(f(&once), once);
        }
    }

    #[test]
    fn dither_preserves_mean_roughly() {
        let img = NormalizedImage::filled(64, 64, [100, 100, 100]);
        let out = bilevel_dither(&img);
        let white = out.pixels().filter(|p| p[0] == 255).count() as f64 / 4096.0;
        assert!((white - 100.0 / 255.0).abs() < 0.02, "{white}");
    }

    #[test]
    fn quantize_two_colors_unchanged() {
        let img = NormalizedImage::from_fn(10, 10, |x, _| if x < 4 { [10, 20, 30] } else { [200, 100, 0] });
        assert_eq!(quantize_colors(&img, 3), img);
    }
}
