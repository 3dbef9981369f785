//! PNG encoder: 8-bit RGB, per-row filter chosen by the minimum sum of
//! absolute (signed) filtered bytes, zlib stream at a fixed DEFLATE level.

use crate::imageio::NormalizedImage;

/// DEFLATE level used for every stream.
pub const DEFLATE_LEVEL: u8 = 6;

const BPP: usize = 3;

pub fn encode(img: &NormalizedImage) -> Vec<u8> {
    let filtered = filter_rows(img);
    let z = miniz_oxide::deflate::compress_to_vec_zlib(&filtered, DEFLATE_LEVEL);
    let mut out = Vec::with_capacity(z.len() + 64);
    out.extend_from_slice(&[0x89, b'P', b'N', b'G', 0x0D, 0x0A, 0x1A, 0x0A]);
    let mut ihdr = Vec::with_capacity(13);
    ihdr.extend_from_slice(&(img.width() as u32).to_be_bytes());
    ihdr.extend_from_slice(&(img.height() as u32).to_be_bytes());
    ihdr.extend_from_slice(&[8, 2, 0, 0, 0]);
    chunk(&mut out, b"IHDR", &ihdr);
    chunk(&mut out, b"IDAT", &z);
    chunk(&mut out, b"IEND", &[]);
    out
}

fn chunk(out: &mut Vec<u8>, kind: &[u8; 4], data: &[u8]) {
    out.extend_from_slice(&(data.len() as u32).to_be_bytes());
    out.extend_from_slice(kind);
    out.extend_from_slice(data);
    let mut h = crc32fast::Hasher::new();
    h.update(kind);
    h.update(data);
    out.extend_from_slice(&h.finalize().to_be_bytes());
}

#[inline]
fn paeth(a: u8, b: u8, c: u8) -> u8 {
    let (ia, ib, ic) = (a as i16, b as i16, c as i16);
    let p = ia + ib - ic;
    let pa = (p - ia).abs();
    let pb = (p - ib).abs();
    let pc = (p - ic).abs();
    if pa <= pb && pa <= pc {
        a
    } else if pb <= pc {
        b
    } else {
        c
    }
}

fn apply_filter(kind: u8, row: &[u8], prev: &[u8], out: &mut [u8]) {
    for i in 0..row.len() {
        let a = if i >= BPP { row[i - BPP] } else { 0 };
        let b = prev[i];
        let c = if i >= BPP { prev[i - BPP] } else { 0 };
        out[i] = match kind {
            0 => row[i],
            1 => row[i].wrapping_sub(a),
            2 => row[i].wrapping_sub(b),
            3 => row[i].wrapping_sub(((a as u16 + b as u16) / 2) as u8),
            _ => row[i].wrapping_sub(paeth(a, b, c)),
        };
    }
}

/// Filter-type-prefixed scanlines, ready for zlib.
pub fn filter_rows(img: &NormalizedImage) -> Vec<u8> {
    let stride = img.width() * BPP;
    let data = img.as_bytes();
    let zero = vec![0u8; stride];
    let mut out = Vec::with_capacity((stride + 1) * img.height());
    let mut candidate = vec![0u8; stride];
    let mut best = vec![0u8; stride];
    for y in 0..img.height() {
        let row = &data[y * stride..(y + 1) * stride];
        let prev = if y == 0 { &zero[..] } else { &data[(y - 1) * stride..y * stride] };
        let mut best_kind = 0u8;
        let mut best_sum = u64::MAX;
        for kind in 0..5u8 {
            apply_filter(kind, row, prev, &mut candidate);
            let sum: u64 = candidate.iter().map(|&v| (v as i8).unsigned_abs() as u64).sum();
            if sum < best_sum {
                best_sum = sum;
                best_kind = kind;
                best.copy_from_slice(&candidate);
            }
        }
        out.push(best_kind);
        out.extend_from_slice(&best);
    }
    out
}
