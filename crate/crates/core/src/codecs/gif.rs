//! GIF89a encoder: single frame, global color table, variable-width LZW.

use super::quantize::{self, Indexed};
use crate::imageio::NormalizedImage;

const MAX_CODE: u32 = 4096;
const HASH_SIZE: usize = 8192;
const EMPTY: u32 = u32::MAX;

/// Palette for `img`: exact when it has at most 256 colors.
pub fn palettize(img: &NormalizedImage) -> Indexed {
    quantize::quantize(img, 256)
}

/// Complete GIF stream for `img`.
pub fn encode(img: &NormalizedImage) -> Vec<u8> {
    let ix = palettize(img);
    encode_indexed(img.width(), img.height(), &ix)
}

/// Length of the stream `encode` would produce.
pub fn encoded_len(img: &NormalizedImage) -> usize {
    indexed_len(&palettize(img))
}

/// Mean stream length of `img` and its clockwise rotation. The palette does
/// not depend on pixel order, so it is built once and the indices rotated.
pub fn rotavg_len(img: &NormalizedImage) -> f64 {
    let ix = palettize(img);
    let (w, h) = (img.width(), img.height());
    let mut rot = vec![0u8; ix.indices.len()];
    for y in 0..h {
        let xo = h - 1 - y;
        for x in 0..w {
            rot[x * h + xo] = ix.indices[y * w + x];
        }
    }
    let a = indexed_len(&ix);
    let b = indexed_len(&Indexed { palette: ix.palette, indices: rot });
    (a as f64 + b as f64) / 2.0
}

fn indexed_len(ix: &Indexed) -> usize {
    let bits = color_table_bits(ix.palette.len());
    let min_code = bits.max(2);
    let mut counter = CountingSink::default();
    lzw(&ix.indices, min_code, &mut counter);
    let data = counter.bytes;
    let blocks = data.div_ceil(255);
    // header + LSD + table + descriptor + min code + sub-blocks + terminator + trailer
    6 + 7 + 3 * (1 << bits) + 10 + 1 + data + blocks + 1 + 1
}

fn color_table_bits(len: usize) -> u8 {
    let mut bits = 1u8;
    while (1usize << bits) < len {
        bits += 1;
    }
    bits
}

pub fn encode_indexed(width: usize, height: usize, ix: &Indexed) -> Vec<u8> {
    assert!(width <= u16::MAX as usize && height <= u16::MAX as usize, "GIF dimensions exceed 65535");
    let bits = color_table_bits(ix.palette.len());
    let mut out = Vec::with_capacity(ix.indices.len() / 2 + 1024);
    out.extend_from_slice(b"GIF89a");
    out.extend_from_slice(&(width as u16).to_le_bytes());
    out.extend_from_slice(&(height as u16).to_le_bytes());
    out.push(0x80 | 0x70 | (bits - 1));
    out.push(0); // background
    out.push(0); // aspect
    for i in 0..(1usize << bits) {
        out.extend_from_slice(&ix.palette.get(i).copied().unwrap_or([0, 0, 0]));
    }
    out.push(0x2C);
    out.extend_from_slice(&[0, 0, 0, 0]);
    out.extend_from_slice(&(width as u16).to_le_bytes());
    out.extend_from_slice(&(height as u16).to_le_bytes());
    out.push(0);
    let min_code = bits.max(2);
    out.push(min_code);
    let mut sink = VecSink::default();
    lzw(&ix.indices, min_code, &mut sink);
    for chunk in sink.bytes.chunks(255) {
        out.push(chunk.len() as u8);
        out.extend_from_slice(chunk);
    }
    out.push(0);
    out.push(0x3B);
    out
}

trait ByteSink {
    fn push(&mut self, b: u8);
}

#[derive(Default)]
struct VecSink {
    bytes: Vec<u8>,
}

impl ByteSink for VecSink {
    fn push(&mut self, b: u8) {
        self.bytes.push(b);
    }
}

#[derive(Default)]
struct CountingSink {
    bytes: usize,
}

impl ByteSink for CountingSink {
    fn push(&mut self, _b: u8) {
        self.bytes += 1;
    }
}

struct BitWriter<'a, S: ByteSink> {
    sink: &'a mut S,
    acc: u32,
    nbits: u32,
}

impl<S: ByteSink> BitWriter<'_, S> {
    #[inline]
    fn write(&mut self, code: u32, width: u32) {
        self.acc |= code << self.nbits;
        self.nbits += width;
        while self.nbits >= 8 {
            self.sink.push(self.acc as u8);
            self.acc >>= 8;
            self.nbits -= 8;
        }
    }

    fn flush(&mut self) {
        if self.nbits > 0 {
            self.sink.push(self.acc as u8);
            self.acc = 0;
            self.nbits = 0;
        }
    }
}

/// Open-addressed (prefix, symbol) -> code table.
struct Dict {
    keys: Vec<u32>,
    vals: Vec<u16>,
}

impl Dict {
    fn new() -> Self {
        Dict { keys: vec![EMPTY; HASH_SIZE], vals: vec![0; HASH_SIZE] }
    }

    fn clear(&mut self) {
        self.keys.fill(EMPTY);
    }

    #[inline]
    fn slot(&self, key: u32) -> usize {
        let mut h = (key.wrapping_mul(0x9E37_79B1) >> 19) as usize & (HASH_SIZE - 1);
        while self.keys[h] != EMPTY && self.keys[h] != key {
            h = (h + 1) & (HASH_SIZE - 1);
        }
        h
    }
}

fn lzw<S: ByteSink>(indices: &[u8], min_code: u8, sink: &mut S) {
    let clear = 1u32 << min_code;
    let eoi = clear + 1;
    let mut width = min_code as u32 + 1;
    let mut next = eoi + 1;
    let mut w = BitWriter { sink, acc: 0, nbits: 0 };
    let mut dict = Dict::new();
    w.write(clear, width);
    let mut iter = indices.iter();
    let Some(&first) = iter.next() else {
        w.write(eoi, width);
        w.flush();
        return;
    };
    let mut prefix = first as u32;
    for &k in iter {
        let key = prefix << 8 | k as u32;
        let h = dict.slot(key);
        if dict.keys[h] == key {
            prefix = dict.vals[h] as u32;
            continue;
        }
        w.write(prefix, width);
        if next < MAX_CODE {
            dict.keys[h] = key;
            dict.vals[h] = next as u16;
            next += 1;
            if next > (1 << width) && width < 12 {
                width += 1;
            }
        } else {
            w.write(clear, width);
            dict.clear();
            width = min_code as u32 + 1;
            next = eoi + 1;
        }
        prefix = k as u32;
    }
    w.write(prefix, width);
    w.write(eoi, width);
    w.flush();
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decode_with_image_crate(bytes: &[u8]) -> NormalizedImage {
        let d = image::load_from_memory_with_format(bytes, image::ImageFormat::Gif).unwrap().to_rgb8();
        let (w, h) = d.dimensions();
        NormalizedImage::from_rgb(w as usize, h as usize, d.into_raw())
    }

    #[test]
    fn few_color_round_trip() {
        let img = NormalizedImage::from_fn(123, 77, |x, y| {
            let v = ((x / 7 + y / 5) % 6) as u8;
            [v * 40, 255 - v * 30, (v * 17) ^ 0x55]
        });
        assert_eq!(decode_with_image_crate(&encode(&img)), img);
    }

    #[test]
    fn wide_palette_exercises_table_resets() {
        // 256 colors, high-entropy index stream: hits 12-bit codes and clears
        let mut s = 0x1234_5678u32;
        let img = NormalizedImage::from_fn(300, 200, |_, _| {
            s = s.wrapping_mul(1_664_525).wrapping_add(1_013_904_223);
            let v = (s >> 24) as u8;
            [v, v.wrapping_mul(3), v.wrapping_mul(7)]
        });
        assert_eq!(decode_with_image_crate(&encode(&img)), img);
    }

    #[test]
    fn single_pixel_and_two_colors() {
        let img = NormalizedImage::filled(1, 1, [1, 2, 3]);
        assert_eq!(decode_with_image_crate(&encode(&img)), img);
        let img = NormalizedImage::from_fn(9, 3, |x, _| if x % 2 == 0 { [0; 3] } else { [255; 3] });
        assert_eq!(decode_with_image_crate(&encode(&img)), img);
    }

    #[test]
    fn deterministic_length() {
        let img = NormalizedImage::from_fn(64, 64, |x, y| [(x * y) as u8, x as u8, y as u8]);
        assert_eq!(encode(&img), encode(&img));
    }
}
