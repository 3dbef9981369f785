//! Baseline sequential JPEG encoder (JFIF, YCbCr, standard Huffman tables).
//!
//! Quality >= 90 encodes 4:4:4, anything lower 4:2:0. Quantization tables
//! are the Annex K tables scaled by `q < 50 ? 5000 / q : 200 - 2q`, with
//! quality 0 clamped to 1.

use crate::imageio::NormalizedImage;

const LUMA_Q: [u16; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61, 12, 12, 14, 19, 26, 58, 60, 55, 14, 13, 16, 24, 40, 57, 69, 56, 14, 17, 22, 29, 51, 87,
    80, 62, 18, 22, 37, 56, 68, 109, 103, 77, 24, 35, 55, 64, 81, 104, 113, 92, 49, 64, 78, 87, 103, 121, 120, 101, 72, 92,
    95, 98, 112, 100, 103, 99,
];

const CHROMA_Q: [u16; 64] = [
    17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99, 24, 26, 56, 99, 99, 99, 99, 99, 47, 66, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99,
];

const ZIGZAG: [usize; 64] = [
    0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5, 12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6, 7, 14, 21, 28, 35,
    42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51, 58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62,
    63,
];

const DC_LUMA_BITS: [u8; 16] = [0, 1, 5, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0];
const DC_LUMA_VALS: [u8; 12] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11];
const DC_CHROMA_BITS: [u8; 16] = [0, 3, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0];
const DC_CHROMA_VALS: [u8; 12] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11];
const AC_LUMA_BITS: [u8; 16] = [0, 2, 1, 3, 3, 2, 4, 3, 5, 5, 4, 4, 0, 0, 1, 0x7d];
const AC_LUMA_VALS: [u8; 162] = [
    0x01, 0x02, 0x03, 0x00, 0x04, 0x11, 0x05, 0x12, 0x21, 0x31, 0x41, 0x06, 0x13, 0x51, 0x61, 0x07, 0x22, 0x71, 0x14, 0x32,
    0x81, 0x91, 0xa1, 0x08, 0x23, 0x42, 0xb1, 0xc1, 0x15, 0x52, 0xd1, 0xf0, 0x24, 0x33, 0x62, 0x72, 0x82, 0x09, 0x0a, 0x16,
    0x17, 0x18, 0x19, 0x1a, 0x25, 0x26, 0x27, 0x28, 0x29, 0x2a, 0x34, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3a, 0x43, 0x44, 0x45,
    0x46, 0x47, 0x48, 0x49, 0x4a, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59, 0x5a, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68, 0x69,
    0x6a, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78, 0x79, 0x7a, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88, 0x89, 0x8a, 0x92, 0x93, 0x94,
    0x95, 0x96, 0x97, 0x98, 0x99, 0x9a, 0xa2, 0xa3, 0xa4, 0xa5, 0xa6, 0xa7, 0xa8, 0xa9, 0xaa, 0xb2, 0xb3, 0xb4, 0xb5, 0xb6,
    0xb7, 0xb8, 0xb9, 0xba, 0xc2, 0xc3, 0xc4, 0xc5, 0xc6, 0xc7, 0xc8, 0xc9, 0xca, 0xd2, 0xd3, 0xd4, 0xd5, 0xd6, 0xd7, 0xd8,
    0xd9, 0xda, 0xe1, 0xe2, 0xe3, 0xe4, 0xe5, 0xe6, 0xe7, 0xe8, 0xe9, 0xea, 0xf1, 0xf2, 0xf3, 0xf4, 0xf5, 0xf6, 0xf7, 0xf8,
    0xf9, 0xfa,
];
const AC_CHROMA_BITS: [u8; 16] = [0, 2, 1, 2, 4, 4, 3, 4, 7, 5, 4, 4, 0, 1, 2, 0x77];
const AC_CHROMA_VALS: [u8; 162] = [
    0x00, 0x01, 0x02, 0x03, 0x11, 0x04, 0x05, 0x21, 0x31, 0x06, 0x12, 0x41, 0x51, 0x07, 0x61, 0x71, 0x13, 0x22, 0x32, 0x81,
    0x08, 0x14, 0x42, 0x91, 0xa1, 0xb1, 0xc1, 0x09, 0x23, 0x33, 0x52, 0xf0, 0x15, 0x62, 0x72, 0xd1, 0x0a, 0x16, 0x24, 0x34,
    0xe1, 0x25, 0xf1, 0x17, 0x18, 0x19, 0x1a, 0x26, 0x27, 0x28, 0x29, 0x2a, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3a, 0x43, 0x44,
    0x45, 0x46, 0x47, 0x48, 0x49, 0x4a, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59, 0x5a, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68,
    0x69, 0x6a, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78, 0x79, 0x7a, 0x82, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88, 0x89, 0x8a, 0x92,
    0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9a, 0xa2, 0xa3, 0xa4, 0xa5, 0xa6, 0xa7, 0xa8, 0xa9, 0xaa, 0xb2, 0xb3, 0xb4,
    0xb5, 0xb6, 0xb7, 0xb8, 0xb9, 0xba, 0xc2, 0xc3, 0xc4, 0xc5, 0xc6, 0xc7, 0xc8, 0xc9, 0xca, 0xd2, 0xd3, 0xd4, 0xd5, 0xd6,
    0xd7, 0xd8, 0xd9, 0xda, 0xe2, 0xe3, 0xe4, 0xe5, 0xe6, 0xe7, 0xe8, 0xe9, 0xea, 0xf2, 0xf3, 0xf4, 0xf5, 0xf6, 0xf7, 0xf8,
    0xf9, 0xfa,
];

/// Huffman code lookup built from a (bits, values) table spec.
struct HuffTable {
    code: [u16; 256],
    len: [u8; 256],
}

impl HuffTable {
    fn new(bits: &[u8; 16], vals: &[u8]) -> Self {
        let mut code = [0u16; 256];
        let mut len = [0u8; 256];
        let mut c = 0u16;
        let mut k = 0;
        for (l, &n) in bits.iter().enumerate() {
            for _ in 0..n {
                code[vals[k] as usize] = c;
                len[vals[k] as usize] = l as u8 + 1;
                c += 1;
                k += 1;
            }
            c <<= 1;
        }
        HuffTable { code, len }
    }
}

/// Table-scaling factor for a 0..=100 quality.
pub fn quality_scale(quality: u8) -> u32 {
    let q = quality.clamp(1, 100) as u32;
    if q < 50 {
        5000 / q
    } else {
        200 - 2 * q
    }
}

pub fn scaled_table(base: &[u16; 64], quality: u8) -> [u16; 64] {
    let scale = quality_scale(quality);
    let mut t = [0u16; 64];
    for i in 0..64 {
        t[i] = ((base[i] as u32 * scale + 50) / 100).clamp(1, 255) as u16;
    }
    t
}

struct BitWriter {
    out: Vec<u8>,
    acc: u32,
    nbits: u32,
}

impl BitWriter {
    fn write(&mut self, code: u32, len: u32) {
        if len == 0 {
            return;
        }
        self.acc = (self.acc << len) | (code & ((1 << len) - 1));
        self.nbits += len;
        while self.nbits >= 8 {
            let b = (self.acc >> (self.nbits - 8)) as u8;
            self.out.push(b);
            if b == 0xFF {
                self.out.push(0);
            }
            self.nbits -= 8;
        }
        self.acc &= (1 << self.nbits) - 1;
    }

    fn flush(&mut self) {
        if self.nbits > 0 {
            let pad = 8 - self.nbits;
            self.write((1 << pad) - 1, pad);
        }
    }
}

fn cos_table() -> [[f64; 8]; 8] {
    let mut t = [[0f64; 8]; 8];
    for (u, row) in t.iter_mut().enumerate() {
        let cu = if u == 0 { std::f64::consts::FRAC_1_SQRT_2 } else { 1.0 };
        for (x, v) in row.iter_mut().enumerate() {
            *v = 0.5 * cu * (((2 * x + 1) as f64 * u as f64 * std::f64::consts::PI) / 16.0).cos();
        }
    }
    t
}

/// Orthonormal 2-D DCT-II of a level-shifted block.
fn fdct(block: &[f64; 64], cos: &[[f64; 8]; 8]) -> [f64; 64] {
    let mut tmp = [0f64; 64];
    for y in 0..8 {
        for u in 0..8 {
            let mut s = 0.0;
            for x in 0..8 {
                s += cos[u][x] * block[y * 8 + x];
            }
            tmp[y * 8 + u] = s;
        }
    }
    let mut out = [0f64; 64];
    for u in 0..8 {
        for v in 0..8 {
            let mut s = 0.0;
            for y in 0..8 {
                s += cos[v][y] * tmp[y * 8 + u];
            }
            out[v * 8 + u] = s;
        }
    }
    out
}

#[inline]
fn magnitude_category(v: i32) -> u32 {
    32 - v.unsigned_abs().leading_zeros()
}

struct Encoder {
    bits: BitWriter,
    cos: [[f64; 8]; 8],
    dc: [HuffTable; 2],
    ac: [HuffTable; 2],
}

impl Encoder {
    fn encode_block(&mut self, block: &[f64; 64], qt: &[u16; 64], table: usize, pred: &mut i32) {
        let coef = fdct(block, &self.cos);
        let mut q = [0i32; 64];
        for (k, &zz) in ZIGZAG.iter().enumerate() {
            q[k] = (coef[zz] / qt[zz] as f64).round() as i32;
        }
        let diff = q[0] - *pred;
        *pred = q[0];
        let cat = magnitude_category(diff);
        let dc = &self.dc[table];
        self.bits.write(dc.code[cat as usize] as u32, dc.len[cat as usize] as u32);
        self.bits.write(amplitude_bits(diff, cat), cat);
        let mut run = 0u32;
        for &v in &q[1..] {
            if v == 0 {
                run += 1;
                continue;
            }
            while run > 15 {
                let ac = &self.ac[table];
                self.bits.write(ac.code[0xF0] as u32, ac.len[0xF0] as u32);
                run -= 16;
            }
            let cat = magnitude_category(v);
            let sym = ((run << 4) | cat) as usize;
            let ac = &self.ac[table];
            self.bits.write(ac.code[sym] as u32, ac.len[sym] as u32);
            self.bits.write(amplitude_bits(v, cat), cat);
            run = 0;
        }
        if run > 0 {
            let ac = &self.ac[table];
            self.bits.write(ac.code[0] as u32, ac.len[0] as u32);
        }
    }
}

#[inline]
fn amplitude_bits(v: i32, cat: u32) -> u32 {
    if v >= 0 {
        v as u32
    } else {
        (v - 1) as u32 & ((1u32 << cat) - 1)
    }
}

/// Planar YCbCr conversion (JFIF full-range).
fn to_ycbcr(img: &NormalizedImage) -> [Vec<f64>; 3] {
    let n = img.pixel_count();
    let (mut y, mut cb, mut cr) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for [r, g, b] in img.pixels() {
        let (r, g, b) = (r as f64, g as f64, b as f64);
        y.push(0.299 * r + 0.587 * g + 0.114 * b);
        cb.push(-0.168_735_892 * r - 0.331_264_108 * g + 0.5 * b + 128.0);
        cr.push(0.5 * r - 0.418_687_589 * g - 0.081_312_411 * b + 128.0);
    }
    [y, cb, cr]
}

/// Averages 2x2 neighborhoods (edge-replicated).
fn subsample(plane: &[f64], w: usize, h: usize) -> (Vec<f64>, usize, usize) {
    let (cw, ch) = (w.div_ceil(2), h.div_ceil(2));
    let mut out = Vec::with_capacity(cw * ch);
    for y in 0..ch {
        for x in 0..cw {
            let (x0, y0) = (2 * x, 2 * y);
            let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
            out.push((plane[y0 * w + x0] + plane[y0 * w + x1] + plane[y1 * w + x0] + plane[y1 * w + x1]) / 4.0);
        }
    }
    (out, cw, ch)
}

fn load_block(plane: &[f64], w: usize, h: usize, bx: usize, by: usize) -> [f64; 64] {
    let mut b = [0f64; 64];
    for y in 0..8 {
        let sy = (by + y).min(h - 1);
        for x in 0..8 {
            let sx = (bx + x).min(w - 1);
            b[y * 8 + x] = plane[sy * w + sx] - 128.0;
        }
    }
    b
}

fn marker_segment(out: &mut Vec<u8>, marker: u8, payload: &[u8]) {
    out.extend_from_slice(&[0xFF, marker]);
    out.extend_from_slice(&((payload.len() + 2) as u16).to_be_bytes());
    out.extend_from_slice(payload);
}

pub fn encode(img: &NormalizedImage, quality: u8) -> Vec<u8> {
    let (w, h) = (img.width(), img.height());
    let subsampled = quality < 90;
    let lq = scaled_table(&LUMA_Q, quality);
    let cq = scaled_table(&CHROMA_Q, quality);

    let mut out = Vec::new();
    out.extend_from_slice(&[0xFF, 0xD8]);
    marker_segment(&mut out, 0xE0, &[b'J', b'F', b'I', b'F', 0, 1, 1, 0, 0, 1, 0, 1, 0, 0]);
    for (id, t) in [(0u8, &lq), (1u8, &cq)] {
        let mut p = vec![id];
        p.extend(ZIGZAG.iter().map(|&z| t[z] as u8));
        marker_segment(&mut out, 0xDB, &p);
    }
    let hv = if subsampled { 0x22 } else { 0x11 };
    let mut sof = vec![8];
    sof.extend_from_slice(&(h as u16).to_be_bytes());
    sof.extend_from_slice(&(w as u16).to_be_bytes());
    sof.extend_from_slice(&[3, 1, hv, 0, 2, 0x11, 1, 3, 0x11, 1]);
    marker_segment(&mut out, 0xC0, &sof);
    for (class_id, bits, vals) in [
        (0x00u8, &DC_LUMA_BITS, &DC_LUMA_VALS[..]),
        (0x10, &AC_LUMA_BITS, &AC_LUMA_VALS[..]),
        (0x01, &DC_CHROMA_BITS, &DC_CHROMA_VALS[..]),
        (0x11, &AC_CHROMA_BITS, &AC_CHROMA_VALS[..]),
    ] {
        let mut p = vec![class_id];
        p.extend_from_slice(bits);
        p.extend_from_slice(vals);
        marker_segment(&mut out, 0xC4, &p);
    }
    marker_segment(&mut out, 0xDA, &[3, 1, 0x00, 2, 0x11, 3, 0x11, 0, 63, 0]);

    let mut enc = Encoder {
        bits: BitWriter { out: Vec::new(), acc: 0, nbits: 0 },
        cos: cos_table(),
        dc: [HuffTable::new(&DC_LUMA_BITS, &DC_LUMA_VALS), HuffTable::new(&DC_CHROMA_BITS, &DC_CHROMA_VALS)],
        ac: [HuffTable::new(&AC_LUMA_BITS, &AC_LUMA_VALS), HuffTable::new(&AC_CHROMA_BITS, &AC_CHROMA_VALS)],
    };
    let [yp, cbp, crp] = to_ycbcr(img);
    let mut preds = [0i32; 3];
    if subsampled {
        let (cbs, cw, ch) = subsample(&cbp, w, h);
        let (crs, _, _) = subsample(&crp, w, h);
        for my in (0..h).step_by(16) {
            for mx in (0..w).step_by(16) {
                for (dy, dx) in [(0, 0), (0, 8), (8, 0), (8, 8)] {
                    let b = load_block(&yp, w, h, mx + dx, my + dy);
                    enc.encode_block(&b, &lq, 0, &mut preds[0]);
                }
                let b = load_block(&cbs, cw, ch, mx / 2, my / 2);
                enc.encode_block(&b, &cq, 1, &mut preds[1]);
                let b = load_block(&crs, cw, ch, mx / 2, my / 2);
                enc.encode_block(&b, &cq, 1, &mut preds[2]);
            }
        }
    } else {
        for my in (0..h).step_by(8) {
            for mx in (0..w).step_by(8) {
                let b = load_block(&yp, w, h, mx, my);
                enc.encode_block(&b, &lq, 0, &mut preds[0]);
                let b = load_block(&cbp, w, h, mx, my);
                enc.encode_block(&b, &cq, 1, &mut preds[1]);
                let b = load_block(&crp, w, h, mx, my);
                enc.encode_block(&b, &cq, 1, &mut preds[2]);
            }
        }
    }
    enc.bits.flush();
    out.extend_from_slice(&enc.bits.out);
    out.extend_from_slice(&[0xFF, 0xD9]);
    out
}
