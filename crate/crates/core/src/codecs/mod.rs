//! In-memory, deterministic encoders. Downstream code only consumes the
//! encoded byte length, but every encoder emits a complete, valid stream.

pub mod gif;
pub mod jpeg;
pub mod png;
pub mod quantize;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::imageio::{rotate90, NormalizedImage};

/// The codec axis of the ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodecId {
    Gif,
    Png,
    Jpeg100,
    Jpeg0,
}

impl CodecId {
    pub const ALL: [CodecId; 4] = [CodecId::Gif, CodecId::Png, CodecId::Jpeg100, CodecId::Jpeg0];

    pub fn name(self) -> &'static str {
        match self {
            CodecId::Gif => "gif",
            CodecId::Png => "png",
            CodecId::Jpeg100 => "jpeg100",
            CodecId::Jpeg0 => "jpeg0",
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            CodecId::Gif => "gif",
            CodecId::Png => "png",
            CodecId::Jpeg100 | CodecId::Jpeg0 => "jpg",
        }
    }

    /// Encodes `img` to a complete stream.
    pub fn encode(self, img: &NormalizedImage) -> Vec<u8> {
        match self {
            CodecId::Gif => gif::encode(img),
            CodecId::Png => png::encode(img),
            CodecId::Jpeg100 => jpeg::encode(img, 100),
            CodecId::Jpeg0 => jpeg::encode(img, 0),
        }
    }

    /// Encoded byte length of `img`.
    pub fn size(self, img: &NormalizedImage) -> usize {
        match self {
            CodecId::Gif => gif::encoded_len(img),
            _ => self.encode(img).len(),
        }
    }
}

impl fmt::Display for CodecId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CodecId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gif" => Ok(CodecId::Gif),
            "png" => Ok(CodecId::Png),
            "jpeg100" => Ok(CodecId::Jpeg100),
            "jpeg0" => Ok(CodecId::Jpeg0),
            other => Err(format!("unknown codec `{other}`")),
        }
    }
}

pub fn gif_size(img: &NormalizedImage) -> usize {
    CodecId::Gif.size(img)
}

pub fn png_size(img: &NormalizedImage) -> usize {
    CodecId::Png.size(img)
}

/// JPEG size at quality 0 or 100 (other values are accepted and scaled the
/// same way).
pub fn jpeg_size(img: &NormalizedImage, quality: u8) -> usize {
    jpeg::encode(img, quality).len()
}

/// Mean encoded size of `img` and its 90 degree rotation.
pub fn size_rotavg(img: &NormalizedImage, codec: CodecId) -> f64 {
    if codec == CodecId::Gif {
        return gif::rotavg_len(img);
    }
    let a = codec.size(img);
    let b = codec.size(&rotate90(img));
    (a as f64 + b as f64) / 2.0
}

/// Rotation-averaged baseline sizes at full scale, as ratios of the raw
/// bitmap size `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineSizes {
    pub f: usize,
    pub b_gif: f64,
    pub b_png: f64,
    pub b_jpeg100: f64,
    pub b_jpeg0: f64,
    pub b_gif_bytes: f64,
    pub b_png_bytes: f64,
    pub b_jpeg100_bytes: f64,
    pub b_jpeg0_bytes: f64,
}

impl BaselineSizes {
    pub fn compute(img: &NormalizedImage) -> Self {
        let f = img.raw_size();
        let rot = rotate90(img);
        let avg = |c: CodecId| (c.size(img) as f64 + c.size(&rot) as f64) / 2.0;
        let (g, p, j100, j0) = (avg(CodecId::Gif), avg(CodecId::Png), avg(CodecId::Jpeg100), avg(CodecId::Jpeg0));
        let ff = f as f64;
        BaselineSizes {
            f,
            b_gif: g / ff,
            b_png: p / ff,
            b_jpeg100: j100 / ff,
            b_jpeg0: j0 / ff,
            b_gif_bytes: g,
            b_png_bytes: p,
            b_jpeg100_bytes: j100,
            b_jpeg0_bytes: j0,
        }
    }

    pub fn bytes(&self, codec: CodecId) -> f64 {
        match codec {
            CodecId::Gif => self.b_gif_bytes,
            CodecId::Png => self.b_png_bytes,
            CodecId::Jpeg100 => self.b_jpeg100_bytes,
            CodecId::Jpeg0 => self.b_jpeg0_bytes,
        }
    }

    pub fn ratio(&self, codec: CodecId) -> f64 {
        match codec {
            CodecId::Gif => self.b_gif,
            CodecId::Png => self.b_png,
            CodecId::Jpeg100 => self.b_jpeg100,
            CodecId::Jpeg0 => self.b_jpeg0,
        }
    }
}
