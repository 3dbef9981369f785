//! Palette construction: exact palettes for images with few colors and a
//! deterministic median cut otherwise.
//!
//! Median cut works on a 5-bit-per-channel histogram. Each box is shrunk to
//! its occupied bounds, the most populated splittable box is cut at the
//! pixel-count median of its longest axis (ties R < G < B), and every
//! palette entry is the count-weighted mean of the true colors in its box.

use crate::imageio::NormalizedImage;

/// A palette plus one index per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Indexed {
    pub palette: Vec<[u8; 3]>,
    pub indices: Vec<u8>,
}

impl Indexed {
    pub fn to_image(&self, width: usize, height: usize) -> NormalizedImage {
        let mut px = Vec::with_capacity(self.indices.len() * 3);
        for &i in &self.indices {
            px.extend_from_slice(&self.palette[i as usize]);
        }
        NormalizedImage::from_rgb(width, height, px)
    }
}

#[inline]
fn pack(p: [u8; 3]) -> u32 {
    (p[0] as u32) << 16 | (p[1] as u32) << 8 | p[2] as u32
}

#[inline]
fn unpack(v: u32) -> [u8; 3] {
    [(v >> 16) as u8, (v >> 8) as u8, v as u8]
}

/// Sorted distinct colors, or `None` as soon as more than `max` are seen.
pub fn distinct_colors(img: &NormalizedImage, max: usize) -> Option<Vec<u32>> {
    let mut seen: Vec<u32> = Vec::new();
    let mut last = u32::MAX;
    for p in img.pixels() {
        let v = pack(p);
        if v == last {
            continue;
        }
        last = v;
        if let Err(pos) = seen.binary_search(&v) {
            if seen.len() == max {
                return None;
            }
            seen.insert(pos, v);
        }
    }
    Some(seen)
}

/// Number of distinct colors (exact, unbounded).
pub fn count_colors(img: &NormalizedImage) -> usize {
    let mut all: Vec<u32> = img.pixels().map(pack).collect();
    all.sort_unstable();
    all.dedup();
    all.len()
}

/// Lossless palette when the image has at most `max` colors; palette is
/// sorted by packed RGB value.
pub fn exact_palette(img: &NormalizedImage, max: usize) -> Option<Indexed> {
    let colors = distinct_colors(img, max)?;
    let mut indices = Vec::with_capacity(img.pixel_count());
    let mut last = (u32::MAX, 0u8);
    for p in img.pixels() {
        let v = pack(p);
        if v != last.0 {
            let i = colors.binary_search(&v).expect("color collected above") as u8;
            last = (v, i);
        }
        indices.push(last.1);
    }
    Some(Indexed { palette: colors.into_iter().map(unpack).collect(), indices })
}

/// At most `n` colors (2..=256): exact when possible, median cut otherwise.
pub fn quantize(img: &NormalizedImage, n: usize) -> Indexed {
    let n = n.clamp(1, 256);
    exact_palette(img, n).unwrap_or_else(|| median_cut(img, n))
}

/// Quantized raster with at most `n` distinct colors.
pub fn quantize_image(img: &NormalizedImage, n: usize) -> NormalizedImage {
    quantize(img, n).to_image(img.width(), img.height())
}

const BITS: usize = 5;
const SIDE: usize = 1 << BITS;
const SHIFT: usize = 8 - BITS;

#[inline]
fn bin_of(p: [u8; 3]) -> usize {
    ((p[0] as usize >> SHIFT) << (2 * BITS)) | ((p[1] as usize >> SHIFT) << BITS) | (p[2] as usize >> SHIFT)
}

#[derive(Clone, Debug)]
struct ColorBox {
    lo: [usize; 3],
    hi: [usize; 3],
    count: u64,
}

struct Histogram {
    count: Vec<u32>,
    sum: Vec<[u64; 3]>,
}

impl Histogram {
    fn at(&self, r: usize, g: usize, b: usize) -> usize {
        (r << (2 * BITS)) | (g << BITS) | b
    }

    fn shrink(&self, bx: &mut ColorBox) {
        let mut lo = [SIDE; 3];
        let mut hi = [0; 3];
        let mut count = 0u64;
        for r in bx.lo[0]..=bx.hi[0] {
            for g in bx.lo[1]..=bx.hi[1] {
                for b in bx.lo[2]..=bx.hi[2] {
                    let c = self.count[self.at(r, g, b)];
                    if c > 0 {
                        count += c as u64;
                        for (k, v) in [r, g, b].into_iter().enumerate() {
                            lo[k] = lo[k].min(v);
                            hi[k] = hi[k].max(v);
                        }
                    }
                }
            }
        }
        if count > 0 {
            bx.lo = lo;
            bx.hi = hi;
        }
        bx.count = count;
    }

    /// Pixel counts along `axis` inside the box.
    fn axis_counts(&self, bx: &ColorBox, axis: usize) -> Vec<u64> {
        let mut out = vec![0u64; bx.hi[axis] - bx.lo[axis] + 1];
        for r in bx.lo[0]..=bx.hi[0] {
            for g in bx.lo[1]..=bx.hi[1] {
                for b in bx.lo[2]..=bx.hi[2] {
                    let c = self.count[self.at(r, g, b)];
                    if c > 0 {
                        let v = [r, g, b][axis];
                        out[v - bx.lo[axis]] += c as u64;
                    }
                }
            }
        }
        out
    }
}

/// Median cut to at most `n` colors.
pub fn median_cut(img: &NormalizedImage, n: usize) -> Indexed {
    let n = n.clamp(1, 256);
    let mut hist = Histogram { count: vec![0; SIDE * SIDE * SIDE], sum: vec![[0; 3]; SIDE * SIDE * SIDE] };
    for p in img.pixels() {
        let k = bin_of(p);
        hist.count[k] += 1;
        let s = &mut hist.sum[k];
        s[0] += p[0] as u64;
        s[1] += p[1] as u64;
        s[2] += p[2] as u64;
    }
    let mut first = ColorBox { lo: [0; 3], hi: [SIDE - 1; 3], count: 0 };
    hist.shrink(&mut first);
    let mut boxes = vec![first];
    while boxes.len() < n {
        // most populated box that spans more than one bin; ties to the earliest
        let pick = boxes
            .iter()
            .enumerate()
            .filter(|(_, b)| b.lo != b.hi)
            .max_by(|(ia, a), (ib, b)| a.count.cmp(&b.count).then(ib.cmp(ia)))
            .map(|(i, _)| i);
        let Some(i) = pick else { break };
        let bx = boxes[i].clone();
        let axis = (0..3)
            .max_by(|&a, &b| (bx.hi[a] - bx.lo[a]).cmp(&(bx.hi[b] - bx.lo[b])).then(b.cmp(&a)))
            .unwrap();
        let counts = hist.axis_counts(&bx, axis);
        let half = bx.count.div_ceil(2);
        let mut cum = 0u64;
        let mut cut = 0usize;
        for (k, c) in counts.iter().enumerate() {
            cum += c;
            if cum >= half {
                cut = k;
                break;
            }
        }
        // both halves must be non-empty: the upper box starts after `cut`
        if cut + 1 >= counts.len() {
            cut = counts.len() - 2;
        }
        let split = bx.lo[axis] + cut;
        let mut lower = bx.clone();
        lower.hi[axis] = split;
        let mut upper = bx;
        upper.lo[axis] = split + 1;
        hist.shrink(&mut lower);
        hist.shrink(&mut upper);
        boxes[i] = lower;
        boxes.push(upper);
    }

    let mut bin_to_box = vec![0u8; SIDE * SIDE * SIDE];
    let mut palette = Vec::with_capacity(boxes.len());
    for (bi, bx) in boxes.iter().enumerate() {
        let mut acc = [0u64; 3];
        let mut cnt = 0u64;
        for r in bx.lo[0]..=bx.hi[0] {
            for g in bx.lo[1]..=bx.hi[1] {
                for b in bx.lo[2]..=bx.hi[2] {
                    let k = hist.at(r, g, b);
                    bin_to_box[k] = bi as u8;
                    let c = hist.count[k] as u64;
                    if c > 0 {
                        cnt += c;
                        for ch in 0..3 {
                            acc[ch] += hist.sum[k][ch];
                        }
                    }
                }
            }
        }
        let cnt = cnt.max(1);
        palette.push([
            ((acc[0] * 2 + cnt) / (2 * cnt)) as u8,
            ((acc[1] * 2 + cnt) / (2 * cnt)) as u8,
            ((acc[2] * 2 + cnt) / (2 * cnt)) as u8,
        ]);
    }
    let indices = img.pixels().map(|p| bin_to_box[bin_of(p)]).collect();
    Indexed { palette, indices }
}
