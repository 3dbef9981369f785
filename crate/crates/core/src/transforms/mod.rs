//! The visual-transformation bank: a registry of deterministic image-to-image
//! functions addressed by id.

pub mod color_ops;
pub mod edges;
pub mod fft;
pub mod flood;
pub mod fx;
pub mod lines;
pub mod morph;
pub mod ops;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codecs::CodecId;
use crate::imageio::NormalizedImage;

pub use color_ops::quantize_colors;
pub use fft::fft_pair;
pub use flood::{flood_fill, FloodPattern};
pub use lines::canny_edges;
pub use morph::pixelate;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransformError {
    #[error("unknown transform `{0}`")]
    UnknownTransform(String),
    #[error("bad parameters for `{id}`: {reason}")]
    BadParams { id: String, reason: String },
}

/// How a transform's output dimensions relate to its input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DimRule {
    Same,
    /// Padded to a square of side `max(w, h)`.
    Square,
    /// Cropped; no larger than the input in either dimension.
    Cropped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FftPart {
    Magnitude,
    Phase,
}

/// One registry entry with its default matrix of codecs and scales.
#[derive(Debug, Clone, Copy)]
pub struct TransformDef {
    pub id: &'static str,
    pub description: &'static str,
    pub params: &'static [(&'static str, f64)],
    pub codecs: &'static [CodecId],
    pub scales: &'static [f64],
    pub dims: DimRule,
    /// Part of the ensemble shipped in the default configuration.
    pub default: bool,
}

impl TransformDef {
    pub fn fft_part(&self) -> Option<FftPart> {
        if self.id.starts_with("fft1") {
            Some(FftPart::Magnitude)
        } else if self.id.starts_with("fft2") {
            Some(FftPart::Phase)
        } else {
            None
        }
    }

    pub fn default_spec(&self) -> TransformSpec {
        TransformSpec {
            id: self.id.to_string(),
            params: BTreeMap::new(),
            codecs: self.codecs.to_vec(),
            scales: self.scales.to_vec(),
        }
    }
}

/// A configured transform: registry id, parameter overrides and the codec x
/// scale matrix it contributes features for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformSpec {
    pub id: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub codecs: Vec<CodecId>,
    pub scales: Vec<f64>,
}

impl TransformSpec {
    pub fn def(&self) -> Result<&'static TransformDef, TransformError> {
        lookup(&self.id)
    }

    /// Parameter value with registry default; rejects unknown keys.
    fn param(&self, def: &TransformDef, key: &str) -> f64 {
        self.params
            .get(key)
            .copied()
            .unwrap_or_else(|| def.params.iter().find(|(k, _)| *k == key).map(|(_, v)| *v).unwrap_or(f64::NAN))
    }

    pub fn validate(&self) -> Result<&'static TransformDef, TransformError> {
        let def = self.def()?;
        let bad = |reason: String| TransformError::BadParams { id: self.id.clone(), reason };
        for (k, v) in &self.params {
            if !def.params.iter().any(|(name, _)| name == k) {
                return Err(bad(format!("unknown parameter `{k}`")));
            }
            if !v.is_finite() {
                return Err(bad(format!("`{k}` is not finite")));
            }
        }
        for &(name, _) in def.params {
            let v = self.param(def, name);
            let ok = match name {
                "sigma" | "blur" | "factor" | "amount" => v > 0.0,
                "lo" => v > 0.0 && v < self.param(def, "hi"),
                "hi" => v <= 1.0,
                "fuzz" => (0.0..1.0).contains(&v),
                "offset" => (0.0..1.0).contains(&v),
                "n" | "colors" => v >= 2.0 && v.fract() == 0.0 && v <= 256.0,
                "radius" | "width" | "height" | "iterations" | "threshold" | "block" => v >= 1.0 && v.fract() == 0.0,
                _ => true,
            };
            if !ok {
                return Err(bad(format!("`{name}` = {v} out of range")));
            }
        }
        if self.codecs.is_empty() {
            return Err(bad("no codecs".into()));
        }
        if self.scales.is_empty() || self.scales.iter().any(|&s| !(s > 0.0 && s <= 1.0)) {
            return Err(bad("scales must lie in (0, 1]".into()));
        }
        Ok(def)
    }
}

use CodecId::{Gif, Png};

const G: &[CodecId] = &[Gif];
const GP: &[CodecId] = &[Gif, Png];
const S1: &[f64] = &[1.0];
const S14: &[f64] = &[1.0, 0.4];
const CANNY: &[(&str, f64)] = &[("sigma", 1.4), ("lo", 0.1), ("hi", 0.3)];
const FUZZ: &[(&str, f64)] = &[("fuzz", 0.1)];

macro_rules! def {
    ($id:expr, $codecs:expr, $scales:expr, $params:expr, $desc:expr) => {
        def!($id, $codecs, $scales, $params, $desc, DimRule::Same)
    };
    ($id:expr, $codecs:expr, $scales:expr, $params:expr, $desc:expr, $dims:expr) => {
        TransformDef {
            id: $id,
            description: $desc,
            params: $params,
            codecs: $codecs,
            scales: $scales,
            dims: $dims,
            default: true,
        }
    };
}

pub static REGISTRY: &[TransformDef] = &[
    def!("blur10", GP, S14, &[("sigma", 10.0)], "Gaussian blur, sigma 10"),
    def!("blur30", G, S1, &[("sigma", 30.0)], "Gaussian blur, sigma 30"),
    def!("colors_grayscale", G, S14, &[], "Grayscale"),
    def!("colors_quantize_bw", G, S14, &[], "Black and white threshold"),
    def!("colors_quantize_bw_dither", G, S14, &[], "Black and white with Floyd-Steinberg dithering"),
    def!("colors_quantize3", G, S14, &[("n", 3.0)], "Median-cut quantization to 3 colors"),
    def!("colors_quantize5", G, S1, &[("n", 5.0)], "Median-cut quantization to 5 colors"),
    def!("colors_acos", G, S14, &[], "Channel values mapped through arc cosine"),
    def!("colors_p10", G, S14, &[], "Channel values raised to the 10th power"),
    def!("colors_sqrt", G, S1, &[], "Channel values square-rooted"),
    def!("colors_round", G, S1, &[], "Channel values rounded to 0 or 1"),
    def!("colors_brightness", G, S1, &[("factor", 4.0)], "HSL lightness increased by 300%"),
    def!("colors_saturate", G, S1, &[("factor", 51.0)], "HSL saturation increased by 5000%"),
    def!("color_chroma_divide", G, S1, &[], "Channels divided by LCh chroma"),
    def!("colors_roundchroma", G, S1, &[], "LCh chroma rounded to zero or full"),
    def!("color_luminance_divide", G, S1, &[], "Channels divided by LCh lightness"),
    def!("color_luminance_lighten", G, S1, &[], "Lightness added as a linear-light layer"),
    def!("color_darken_intensity", G, S1, &[], "Darker of image and negative, then intensity"),
    def!("colors_add2", G, S1, &[("factor", 2.0)], "Add-composite of the image with itself"),
    def!("lines_bw_canny", G, S14, CANNY, "Canny edges"),
    def!(
        "lines_cartoon",
        G,
        S14,
        &[("sigma", 1.4), ("lo", 0.1), ("hi", 0.3), ("blur", 2.0)],
        "Canny edges multiplied with a blurred copy"
    ),
    def!("lines_division_gray", GP, S14, &[("sigma", 5.0)], "Grayscale divided by its own blur"),
    def!("lines_edge5_gray", GP, S14, &[("radius", 5.0)], "Edge enhancement on grayscale, radius 5"),
    def!("lines_edge10_gray", G, S14, &[("radius", 10.0)], "Edge enhancement on grayscale, radius 10"),
    def!("lines_edge1_color", G, S14, &[("radius", 1.0)], "Edge enhancement on color, radius 1"),
    def!("lines_edge2_color", G, S1, &[("radius", 2.0)], "Edge enhancement on color, radius 2"),
    def!(
        "lines_hough40",
        G,
        S1,
        &[("width", 40.0), ("height", 40.0), ("threshold", 20.0)],
        "Hough lines (width 40, height 40, threshold 20)"
    ),
    def!(
        "lines_hough50",
        G,
        S14,
        &[("width", 50.0), ("height", 50.0), ("threshold", 70.0)],
        "Hough lines (width 50, height 50, threshold 70)"
    ),
    def!("lines_color_comp", G, S1, &[], "Difference from the despeckled image"),
    def!("lines_color_conv", G, S1, &[], "Sobel gradient magnitude per channel"),
    def!("lines_edge_lat", G, S1, &[("radius", 5.0), ("offset", 0.05)], "Local adaptive threshold"),
    def!("emboss_gray4", G, S14, &[("radius", 4.0), ("sigma", 1.0)], "Emboss on grayscale (radius 4, sigma 1)"),
    def!("emboss_col1", G, S1, &[("radius", 1.0), ("sigma", 0.1)], "Emboss on color (radius 1, sigma 0.1)"),
    def!("emboss_conv_grayd", G, S1, &[("sigma", 1.0), ("radius", 3.0)], "Diagonal derivative-of-Gaussian emboss"),
    def!("emboss_conv_grayp", G, S1, &[], "Diagonal Prewitt emboss"),
    def!("emboss_modulate", G, S1, &[], "Lightness self-modulation, then despeckle"),
    def!("morph_pixelate10", G, S14, &[("block", 10.0)], "Pixelation, 10x"),
    def!("morph_pixelate20", G, S14, &[("block", 20.0)], "Pixelation, 20x"),
    def!("morph_add3_pixelate", G, S1, &[("factor", 4.0)], "Add-composite of the image with itself 3 times"),
    def!("morph_despecle10", G, S1, &[("iterations", 10.0)], "3x3 median, 10 passes"),
    def!("morph_oilpaint", G, S1, &[("radius", 3.0)], "Intensity mode filter"),
    def!("morph_squares", G, S1, &[("radius", 3.0)], "Square dilation"),
    def!("flood_centre", G, S14, FUZZ, "Flood fill from the centre"),
    def!("flood_hole", G, S14, FUZZ, "Filled central disc"),
    def!("flood_corners", G, S1, FUZZ, "Flood fill from the corners"),
    def!("flood_thirds", G, S1, FUZZ, "Flood fill from the thirds intersections"),
    def!("fx_deskew_zoom", G, S14, &[], "Hough deskew and centre crop", DimRule::Cropped),
    def!("fx_implode", G, S1, &[("amount", 0.5)], "Radial implosion at the centre"),
    def!("fx_noise", G, S1, &[("amount", 0.5)], "Multiplicative Gaussian noise"),
    def!("fx_scramble", G, S1, &[], "Random permutation of pixel positions"),
    def!("fx_stripes", G, S1, &[("colors", 20.0)], "Quantize to 20 colors, order pixels by frequency"),
    def!("fft1", G, S1, &[], "Fourier magnitude", DimRule::Square),
    def!("fft2", G, S1, &[], "Fourier phase", DimRule::Square),
    def!("fft1_blur10", G, S1, &[("sigma", 10.0)], "Fourier magnitude of blur10", DimRule::Square),
    def!("fft2_blur10", G, S1, &[("sigma", 10.0)], "Fourier phase of blur10", DimRule::Square),
    def!("fft1_colors_quantize3", G, S1, &[("n", 3.0)], "Fourier magnitude of colors_quantize3", DimRule::Square),
    def!("fft2_colors_quantize3", G, S1, &[("n", 3.0)], "Fourier phase of colors_quantize3", DimRule::Square),
    def!(
        "fft1_lines_division_gray",
        G,
        S1,
        &[("sigma", 5.0)],
        "Fourier magnitude of lines_division_gray",
        DimRule::Square
    ),
    def!("fft2_lines_division_gray", G, S1, &[("sigma", 5.0)], "Fourier phase of lines_division_gray", DimRule::Square),
    TransformDef {
        id: "identity",
        description: "Unchanged image (ratio 1 by construction)",
        params: &[],
        codecs: G,
        scales: S1,
        dims: DimRule::Same,
        default: false,
    },
];

pub fn lookup(id: &str) -> Result<&'static TransformDef, TransformError> {
    REGISTRY.iter().find(|d| d.id == id).ok_or_else(|| TransformError::UnknownTransform(id.to_string()))
}

/// Default transform list, in registry order.
pub fn default_specs() -> Vec<TransformSpec> {
    REGISTRY.iter().filter(|d| d.default).map(TransformDef::default_spec).collect()
}

/// Spectra already computed for one source image, shared between the
/// magnitude and phase variants of the same pre-transform.
#[derive(Default)]
pub struct SpectrumMemo {
    entries: HashMap<(String, u32, usize, usize), (NormalizedImage, NormalizedImage)>,
}

impl SpectrumMemo {
    fn key(stem: &str, spec: &TransformSpec, img: &NormalizedImage) -> (String, u32, usize, usize) {
        (format!("{stem}{:?}", spec.params), crc32fast::hash(img.as_bytes()), img.width(), img.height())
    }
}

/// Applies a configured transform. Pure in `(spec, img, seed)`.
pub fn apply_transform(spec: &TransformSpec, img: &NormalizedImage, seed: u64) -> Result<NormalizedImage, TransformError> {
    apply_transform_memo(spec, img, seed, &mut SpectrumMemo::default())
}

/// [`apply_transform`] reusing spectra from `memo`.
pub fn apply_transform_memo(
    spec: &TransformSpec,
    img: &NormalizedImage,
    seed: u64,
    memo: &mut SpectrumMemo,
) -> Result<NormalizedImage, TransformError> {
    let def = spec.validate()?;
    let p = |k: &str| spec.param(def, k);
    let u = |k: &str| spec.param(def, k) as usize;
    let canny = || (p("sigma"), p("lo"), p("hi"));
    let out = match def.id {
        "identity" => img.clone(),
        "blur10" | "blur30" => ops::blur_image(img, p("sigma")),
        "colors_grayscale" => ops::grayscale(img),
        "colors_quantize_bw" => color_ops::bilevel(img),
        "colors_quantize_bw_dither" => color_ops::bilevel_dither(img),
        "colors_quantize3" | "colors_quantize5" => quantize_colors(img, u("n")),
        "colors_acos" => color_ops::acos(img),
        "colors_p10" => color_ops::pow10(img),
        "colors_sqrt" => color_ops::sqrt(img),
        "colors_round" => color_ops::round(img),
        "colors_brightness" => color_ops::brightness(img, p("factor")),
        "colors_saturate" => color_ops::saturate(img, p("factor")),
        "color_chroma_divide" => color_ops::chroma_divide(img),
        "colors_roundchroma" => color_ops::round_chroma(img),
        "color_luminance_divide" => color_ops::luminance_divide(img),
        "color_luminance_lighten" => color_ops::luminance_lighten(img),
        "color_darken_intensity" => color_ops::darken_intensity(img),
        "colors_add2" | "morph_add3_pixelate" => color_ops::self_add(img, p("factor")),
        "lines_bw_canny" => {
            let (s, lo, hi) = canny();
            canny_edges(img, s, lo, hi)
        }
        "lines_cartoon" => {
            let (s, lo, hi) = canny();
            lines::cartoon(img, s, lo, hi, p("blur"))
        }
        "lines_division_gray" => lines::division_gray(img, p("sigma")),
        "lines_edge5_gray" | "lines_edge10_gray" => lines::edge_gray(img, u("radius")),
        "lines_edge1_color" | "lines_edge2_color" => lines::edge_color(img, u("radius")),
        "lines_hough40" | "lines_hough50" => lines::hough_lines(img, u("width"), u("height"), p("threshold") as u32),
        "lines_color_comp" => lines::color_comp(img),
        "lines_color_conv" => lines::color_conv(img),
        "lines_edge_lat" => lines::edge_lat(img, u("radius"), p("offset") as f32),
        "emboss_gray4" => lines::emboss_gray(img, u("radius"), p("sigma")),
        "emboss_col1" => lines::emboss_color(img, u("radius"), p("sigma")),
        "emboss_conv_grayd" => lines::emboss_dog(img, p("sigma"), u("radius")),
        "emboss_conv_grayp" => lines::emboss_prewitt(img),
        "emboss_modulate" => lines::emboss_modulate(img),
        "morph_pixelate10" | "morph_pixelate20" => pixelate(img, u("block")),
        "morph_despecle10" => morph::despeckle(img, u("iterations")),
        "morph_oilpaint" => morph::oilpaint(img, u("radius")),
        "morph_squares" => morph::squares(img, u("radius")),
        "flood_centre" => flood_fill(img, FloodPattern::Centre, p("fuzz")),
        "flood_hole" => flood_fill(img, FloodPattern::Hole, p("fuzz")),
        "flood_corners" => flood_fill(img, FloodPattern::Corners, p("fuzz")),
        "flood_thirds" => flood_fill(img, FloodPattern::Thirds, p("fuzz")),
        "fx_deskew_zoom" => fx::deskew_zoom(img),
        "fx_implode" => fx::implode(img, p("amount")),
        "fx_noise" => fx::noise(img, p("amount"), seed),
        "fx_scramble" => fx::scramble(img, seed),
        "fx_stripes" => fx::stripes(img, u("colors")),
        id => {
            let part = def.fft_part().ok_or_else(|| TransformError::UnknownTransform(id.to_string()))?;
            let stem = &id[4..];
            let key = SpectrumMemo::key(stem, spec, img);
            if !memo.entries.contains_key(&key) {
                let base = match stem {
                    "" => img.clone(),
                    "_blur10" => ops::blur_image(img, p("sigma")),
                    "_colors_quantize3" => quantize_colors(img, u("n")),
                    "_lines_division_gray" => lines::division_gray(img, p("sigma")),
                    _ => return Err(TransformError::UnknownTransform(id.to_string())),
                };
                memo.entries.insert(key.clone(), fft_pair(&base));
            }
            let (mag, phase) = &memo.entries[&key];
            match part {
                FftPart::Magnitude => mag.clone(),
                FftPart::Phase => phase.clone(),
            }
        }
    };
    Ok(out)
}

/// Checks an output against the transform's dimension rule.
pub fn check_dims(def: &TransformDef, input: &NormalizedImage, output: &NormalizedImage) -> bool {
    let (w, h) = (input.width(), input.height());
    match def.dims {
        DimRule::Same => output.width() == w && output.height() == h,
        DimRule::Square => output.width() == w.max(h) && output.height() == w.max(h),
        DimRule::Cropped => output.width() <= w && output.height() <= h && output.width() > 0 && output.height() > 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_unique() {
        let ids: std::collections::BTreeSet<_> = REGISTRY.iter().map(|d| d.id).collect();
        assert_eq!(ids.len(), REGISTRY.len());
    }

    #[test]
    fn default_matrix_has_85_entries() {
        let n: usize = default_specs().iter().map(|s| s.codecs.len() * s.scales.len()).sum();
        assert_eq!(n, 85);
    }

    #[test]
    fn unknown_id_and_bad_params() {
        let img = NormalizedImage::filled(8, 8, [1, 2, 3]);
        let mut s = lookup("blur10").unwrap().default_spec();
        s.id = "nope".into();
        assert!(matches!(apply_transform(&s, &img, 0), Err(TransformError::UnknownTransform(_))));
        let mut s = lookup("blur10").unwrap().default_spec();
        s.params.insert("sigma".into(), -1.0);
        assert!(matches!(apply_transform(&s, &img, 0), Err(TransformError::BadParams { .. })));
        let mut s = lookup("blur10").unwrap().default_spec();
        s.params.insert("radius".into(), 3.0);
        assert!(matches!(apply_transform(&s, &img, 0), Err(TransformError::BadParams { .. })));
    }
}
