//! Seeded synthetic image families with labelled manifests, for exercising
//! the pipeline and the analyses at desk scale.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{derive_seed, rng};
use crate::imageio::NormalizedImage;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot write image: {0}")]
    Image(#[from] image::ImageError),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
    #[error("invalid synthetic spec: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Constant,
    Stripes,
    CheckerNoise,
    GaussianBlobs,
    FractalNoise,
}

impl Family {
    pub const ALL: [Family; 5] =
        [Family::Constant, Family::Stripes, Family::CheckerNoise, Family::GaussianBlobs, Family::FractalNoise];

    pub fn name(self) -> &'static str {
        match self {
            Family::Constant => "constant",
            Family::Stripes => "stripes",
            Family::CheckerNoise => "checker_noise",
            Family::GaussianBlobs => "gaussian_blobs",
            Family::FractalNoise => "fractal_noise",
        }
    }

    /// Named parameters and their defaults.
    pub fn defaults(self) -> &'static [(&'static str, f64)] {
        match self {
            Family::Constant => &[],
            Family::Stripes => &[("period", 16.0)],
            Family::CheckerNoise => &[("cell", 24.0), ("noise", 20.0)],
            Family::GaussianBlobs => &[("count", 8.0), ("radius", 0.1)],
            Family::FractalNoise => &[("persistence", 0.55), ("octaves", 5.0)],
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| SynthError::UnknownFamily(s.to_string()))
    }
}

/// Linear change of one parameter with year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    pub param: String,
    pub slope: f64,
    pub year0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthFamilySpec {
    pub family: Family,
    /// Class label written to the manifest's `style` column.
    pub label: String,
    pub params: BTreeMap<String, f64>,
    pub drift: Option<Drift>,
    pub seed: u64,
}

impl SynthFamilySpec {
    pub fn new(family: Family, seed: u64) -> Self {
        SynthFamilySpec {
            family,
            label: family.name().to_string(),
            params: family.defaults().iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            drift: None,
            seed,
        }
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = label.to_string();
        self
    }

    /// Parameter value at `year`: the base value plus the drift rule when
    /// the drift targets this parameter.
    pub fn param_at(&self, key: &str, year: f64) -> f64 {
        let base = self.params.get(key).copied().unwrap_or(0.0);
        match &self.drift {
            Some(d) if d.param == key => base + d.slope * (year - d.year0),
            _ => base,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        for key in self.params.keys() {
            if !self.family.defaults().iter().any(|(k, _)| k == key) {
                return Err(SynthError::Invalid(format!("{} has no parameter `{key}`", self.family)));
            }
        }
        if let Some(d) = &self.drift {
            if !self.family.defaults().iter().any(|(k, _)| *k == d.param) {
                return Err(SynthError::Invalid(format!("{} has no parameter `{}`", self.family, d.param)));
            }
        }
        if self.label.is_empty() {
            return Err(SynthError::Invalid("empty label".into()));
        }
        Ok(())
    }
}

fn random_color(r: &mut ChaCha8Rng) -> [f64; 3] {
    [r.random_range(0.0..255.0), r.random_range(0.0..255.0), r.random_range(0.0..255.0)]
}

fn px(c: [f64; 3]) -> [u8; 3] {
    c.map(|v| v.round().clamp(0.0, 255.0) as u8)
}

fn mix(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t]
}

/// Lattice value noise summed over octaves, in [0, 1].
fn fractal_field(w: usize, h: usize, persistence: f64, octaves: usize, r: &mut ChaCha8Rng) -> Vec<f64> {
    let mut field = vec![0.0; w * h];
    let mut amp = 1.0;
    let mut total = 0.0;
    let mut cell = (w.max(h) as f64 / 4.0).max(2.0);
    for _ in 0..octaves.max(1) {
        let gw = (w as f64 / cell).ceil() as usize + 2;
        let gh = (h as f64 / cell).ceil() as usize + 2;
        let grid: Vec<f64> = (0..gw * gh).map(|_| r.random::<f64>()).collect();
        for y in 0..h {
            let fy = y as f64 / cell;
            let (y0, ty) = (fy.floor() as usize, fy - fy.floor());
            let sy = ty * ty * (3.0 - 2.0 * ty);
            for x in 0..w {
                let fx = x as f64 / cell;
                let (x0, tx) = (fx.floor() as usize, fx - fx.floor());
                let sx = tx * tx * (3.0 - 2.0 * tx);
                let g = |i: usize, j: usize| grid[j * gw + i];
                let top = g(x0, y0) + (g(x0 + 1, y0) - g(x0, y0)) * sx;
                let bot = g(x0, y0 + 1) + (g(x0 + 1, y0 + 1) - g(x0, y0 + 1)) * sx;
                field[y * w + x] += amp * (top + (bot - top) * sy);
            }
        }
        total += amp;
        amp *= persistence;
        cell = (cell / 2.0).max(1.0);
    }
    field.iter_mut().for_each(|v| *v /= total);
    field
}

/// One image of the family at `year`, fully determined by `(spec, index)`.
pub fn render(spec: &SynthFamilySpec, index: u64, year: f64, w: usize, h: usize) -> NormalizedImage {
    let mut r = rng(derive_seed(spec.seed, index));
    let p = |k: &str| spec.param_at(k, year);
    // per-image variation around the family's parameters
    let jitter = |r: &mut ChaCha8Rng| r.random_range(0.8..1.25);
    match spec.family {
        Family::Constant => {
            let c = px(random_color(&mut r));
            NormalizedImage::filled(w, h, c)
        }
        Family::Stripes => {
            let period = (p("period") * jitter(&mut r)).max(2.0);
            let angle = r.random_range(0.0..std::f64::consts::PI);
            let (a, b) = (random_color(&mut r), random_color(&mut r));
            let (ca, sa) = (angle.cos(), angle.sin());
            NormalizedImage::from_fn(w, h, |x, y| {
                let u = x as f64 * ca + y as f64 * sa;
                if (u / period).rem_euclid(1.0) < 0.5 { px(a) } else { px(b) }
            })
        }
        Family::CheckerNoise => {
            let cell = (p("cell") * jitter(&mut r)).max(2.0);
            let sd = p("noise").max(0.0) * jitter(&mut r);
            let (a, b) = (random_color(&mut r), random_color(&mut r));
            let mut cells = Vec::with_capacity(w * h);
            for y in 0..h {
                for x in 0..w {
                    let odd = ((x as f64 / cell) as i64 + (y as f64 / cell) as i64) % 2 == 1;
                    let base = if odd { a } else { b };
                    let n: f64 = r.sample::<f64, _>(StandardNormal) * sd;
                    cells.push(px([base[0] + n, base[1] + n, base[2] + n]));
                }
            }
            NormalizedImage::from_fn(w, h, |x, y| cells[y * w + x])
        }
        Family::GaussianBlobs => {
            let count = (p("count") * jitter(&mut r)).round().max(1.0) as usize;
            let side = w.min(h) as f64;
            let bg = random_color(&mut r);
            let blobs: Vec<(f64, f64, f64, [f64; 3])> = (0..count)
                .map(|_| {
                    let rad = (p("radius") * side * jitter(&mut r)).max(1.0);
                    (r.random_range(0.0..w as f64), r.random_range(0.0..h as f64), rad, random_color(&mut r))
                })
                .collect();
            NormalizedImage::from_fn(w, h, |x, y| {
                let mut c = bg;
                for &(bx, by, rad, col) in &blobs {
                    let d2 = (x as f64 - bx).powi(2) + (y as f64 - by).powi(2);
                    c = mix(c, col, (-d2 / (2.0 * rad * rad)).exp());
                }
                px(c)
            })
        }
        Family::FractalNoise => {
            let pers = p("persistence").clamp(0.05, 0.95);
            let octaves = p("octaves").round().clamp(1.0, 10.0) as usize;
            let (a, b) = (random_color(&mut r), random_color(&mut r));
            let field = fractal_field(w, h, pers, octaves, &mut r);
            NormalizedImage::from_fn(w, h, |x, y| px(mix(a, b, field[y * w + x])))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    pub per_family: usize,
    pub years: (i64, i64),
    pub width: usize,
    pub height: usize,
    /// Distinct synthetic artists per family.
    pub artists: usize,
    pub seed: u64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions { per_family: 100, years: (1800, 1990), width: 400, height: 400, artists: 10, seed: 1 }
    }
}

/// Writes `per_family` PNGs per spec under `outdir` and a manifest CSV
/// (`id,path,artist,year,style`) listing them. Returns the manifest path.
pub fn generate_corpus(specs: &[SynthFamilySpec], opts: &SynthOptions, outdir: &Path) -> Result<PathBuf, SynthError> {
    if opts.years.1 < opts.years.0 {
        return Err(SynthError::Invalid("year range is reversed".into()));
    }
    for s in specs {
        s.validate()?;
    }
    fs::create_dir_all(outdir.join("images"))?;
    let manifest = outdir.join("manifest.csv");
    let mut wr = csv::Writer::from_path(&manifest)?;
    wr.write_record(["id", "path", "artist", "year", "style"])?;
    let mut years = rng(opts.seed);
    for spec in specs {
        for i in 0..opts.per_family {
            let year = years.random_range(opts.years.0..=opts.years.1);
            let id = format!("{}_{i:04}", spec.label);
            let img = render(spec, i as u64, year as f64, opts.width, opts.height);
            let rel = format!("images/{id}.png");
            image::save_buffer(
                outdir.join(&rel),
                img.as_bytes(),
                img.width() as u32,
                img.height() as u32,
                image::ExtendedColorType::Rgb8,
            )?;
            let artist = format!("{}_artist{}", spec.label, i % opts.artists.max(1));
            wr.write_record([id.as_str(), rel.as_str(), artist.as_str(), &year.to_string(), spec.label.as_str()])?;
        }
    }
    wr.flush()?;
    Ok(manifest)
}

/// One spec per family at defaults, seeded from `seed`.
pub fn default_specs(seed: u64) -> Vec<SynthFamilySpec> {
    Family::ALL.iter().enumerate().map(|(k, &f)| SynthFamilySpec::new(f, derive_seed(seed, k as u64))).collect()
}
