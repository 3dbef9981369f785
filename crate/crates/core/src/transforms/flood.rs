//! Single-color flood fills.

use std::collections::VecDeque;
use std::str::FromStr;

use crate::imageio::NormalizedImage;

/// RGB-cube corners in tie-break order.
pub const CORNERS: [[u8; 3]; 8] = [
    [0, 0, 0],
    [255, 255, 255],
    [255, 0, 0],
    [0, 255, 0],
    [0, 0, 255],
    [0, 255, 255],
    [255, 0, 255],
    [255, 255, 0],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FloodPattern {
    Centre,
    Hole,
    Corners,
    Thirds,
}

impl FromStr for FloodPattern {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "centre" | "center" => Ok(FloodPattern::Centre),
            "hole" => Ok(FloodPattern::Hole),
            "corners" => Ok(FloodPattern::Corners),
            "thirds" => Ok(FloodPattern::Thirds),
            other => Err(format!("unknown flood pattern `{other}`")),
        }
    }
}

/// Color distance normalized so the cube diagonal is 1.
#[inline]
fn distance(a: [u8; 3], b: [u8; 3]) -> f64 {
    let d: f64 = (0..3).map(|c| (a[c] as f64 - b[c] as f64).powi(2)).sum();
    d.sqrt() / (255.0 * 3f64.sqrt())
}

/// Least frequent cube corner, counting pixels within `fuzz` of each corner.
pub fn fill_color(img: &NormalizedImage, fuzz: f64) -> [u8; 3] {
    let mut counts = [0usize; 8];
    for p in img.pixels() {
        for (k, c) in CORNERS.iter().enumerate() {
            if distance(p, *c) <= fuzz {
                counts[k] += 1;
            }
        }
    }
    let mut best = 0;
    for k in 1..8 {
        if counts[k] < counts[best] {
            best = k;
        }
    }
    CORNERS[best]
}

/// 4-connected flood from `seed`, replacing pixels within `fuzz` of the seed's color.
pub fn flood_from(img: &mut NormalizedImage, seed: (usize, usize), fuzz: f64, color: [u8; 3]) {
    let (w, h) = (img.width(), img.height());
    let target = img.get(seed.0, seed.1);
    let mut seen = vec![false; w * h];
    let mut queue = VecDeque::new();
    seen[seed.1 * w + seed.0] = true;
    queue.push_back(seed);
    while let Some((x, y)) = queue.pop_front() {
        img.put(x, y, color);
        let mut visit = |nx: usize, ny: usize, queue: &mut VecDeque<(usize, usize)>| {
            let i = ny * w + nx;
            if !seen[i] && distance(img.get(nx, ny), target) <= fuzz {
                seen[i] = true;
                queue.push_back((nx, ny));
            }
        };
        if x > 0 {
            visit(x - 1, y, &mut queue);
        }
        if x + 1 < w {
            visit(x + 1, y, &mut queue);
        }
        if y > 0 {
            visit(x, y - 1, &mut queue);
        }
        if y + 1 < h {
            visit(x, y + 1, &mut queue);
        }
    }
}

pub fn flood_fill(img: &NormalizedImage, pattern: FloodPattern, fuzz: f64) -> NormalizedImage {
    let (w, h) = (img.width(), img.height());
    let color = fill_color(img, fuzz);
    let mut out = img.clone();
    match pattern {
        FloodPattern::Hole => {
            let r = w.min(h) as f64 / 6.0;
            let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
            for y in 0..h {
                for x in 0..w {
                    if (x as f64 - cx).hypot(y as f64 - cy) <= r {
                        out.put(x, y, color);
                    }
                }
            }
        }
        FloodPattern::Centre => flood_from(&mut out, (w / 2, h / 2), fuzz, color),
        FloodPattern::Corners => {
            for seed in [(0, 0), (w - 1, 0), (0, h - 1), (w - 1, h - 1)] {
                flood_from(&mut out, seed, fuzz, color);
            }
        }
        FloodPattern::Thirds => {
            for seed in [(w / 3, h / 3), (2 * w / 3, h / 3), (w / 3, 2 * h / 3), (2 * w / 3, 2 * h / 3)] {
                flood_from(&mut out, seed, fuzz, color);
            }
        }
    }
    out
}
