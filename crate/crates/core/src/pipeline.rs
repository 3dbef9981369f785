//! Per-image ensemble computation and the parallel corpus driver.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::codecs::{size_rotavg, CodecId};
use crate::config::{scale_label, Config, FeatureKey};
use crate::features::{compute_stats, FeatureError};
use crate::imageio::{load_and_normalize, resize_fraction, rotate90, ImageError, NormalizedImage};
use crate::store::{check_schema, CorpusMatrix, StoreError};
use crate::transforms::{apply_transform_memo, check_dims, SpectrumMemo, TransformError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("transform `{id}` failed: {source}")]
    TransformFailed { id: String, source: TransformError },
    #[error("transform `{id}` produced {got:?} for input {input:?}, violating its dimension rule")]
    BadDimensions { id: String, input: (usize, usize), got: (usize, usize) },
    #[error(transparent)]
    Stats(#[from] FeatureError),
    #[error("feature `{feature}` is {value}")]
    InvalidValue { feature: String, value: f64 },
    #[error("manifest has no records")]
    EmptyCorpus,
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

/// Receives every encoded stream produced while computing a vector.
pub trait StreamSink: Sync {
    fn stream(&self, name: &str, codec: CodecId, bytes: &[u8]);
}

/// Writes streams as `<dir>/<image id>/<name>.<ext>`.
pub struct DirSink {
    pub dir: PathBuf,
}

impl StreamSink for DirSink {
    fn stream(&self, name: &str, codec: CodecId, bytes: &[u8]) {
        let path = self.dir.join(format!("{name}.{}", codec.extension()));
        if let Err(e) = fs::create_dir_all(&self.dir).and_then(|_| fs::write(&path, bytes)) {
            log::warn!("cannot dump stream {}: {e}", path.display());
        }
    }
}

fn encoded_size(codec: CodecId, img: &NormalizedImage, name: &str, sink: Option<&dyn StreamSink>) -> usize {
    match sink {
        Some(s) => {
            let bytes = codec.encode(img);
            s.stream(name, codec, &bytes);
            bytes.len()
        }
        None => codec.size(img),
    }
}

/// Mean encoded size of an image and its 90 degree rotation.
fn rotavg(codec: CodecId, img: &NormalizedImage, name: &str, sink: Option<&dyn StreamSink>) -> f64 {
    if sink.is_none() {
        return size_rotavg(img, codec);
    }
    let a = encoded_size(codec, img, name, sink);
    let b = encoded_size(codec, &rotate90(img), &format!("{name}_rot"), sink);
    (a as f64 + b as f64) / 2.0
}

/// Rotation-averaged full-scale sizes per codec and the raw size `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct Baselines {
    pub f: f64,
    pub bytes: BTreeMap<CodecId, f64>,
    /// `b_{codec}_{scale}` ratios in config order.
    pub ratios: Vec<f64>,
}

pub fn compute_baselines(img: &NormalizedImage, cfg: &Config) -> Result<Baselines, PipelineError> {
    compute_baselines_with(img, cfg, None)
}

fn compute_baselines_with(
    img: &NormalizedImage,
    cfg: &Config,
    sink: Option<&dyn StreamSink>,
) -> Result<Baselines, PipelineError> {
    let f = img.raw_size() as f64;
    let mut needed: Vec<CodecId> = cfg.baseline.codecs.clone();
    for t in &cfg.transforms {
        needed.extend(t.codecs.iter().copied());
    }
    needed.sort();
    needed.dedup();
    let mut bytes = BTreeMap::new();
    for &c in &needed {
        bytes.insert(c, rotavg(c, img, &format!("b_{c}_1"), sink));
    }
    let mut ratios = Vec::new();
    for &c in &cfg.baseline.codecs {
        for &s in &cfg.baseline.scales {
            let size = if s == 1.0 {
                bytes[&c]
            } else {
                let small = resize_fraction(img, s)?;
                rotavg(c, &small, &cfg.feature_id(&FeatureKey::Baseline { codec: c, scale: s }), sink)
            };
            ratios.push(size / f);
        }
    }
    Ok(Baselines { f, bytes, ratios })
}

pub fn compute_ensemble(img: &NormalizedImage, cfg: &Config) -> Result<Vec<f64>, PipelineError> {
    compute_ensemble_with(img, cfg, None)
}

/// Full feature vector in [`Config::feature_ids`] order. Every encoded
/// stream is handed to `sink` when one is given.
pub fn compute_ensemble_with(
    img: &NormalizedImage,
    cfg: &Config,
    sink: Option<&dyn StreamSink>,
) -> Result<Vec<f64>, PipelineError> {
    let base = compute_baselines_with(img, cfg, sink)?;
    let mut out = base.ratios.clone();
    let mut resized: HashMap<u64, NormalizedImage> = HashMap::new();
    let mut memo = SpectrumMemo::default();
    for t in &cfg.transforms {
        let def = t.validate().map_err(|source| PipelineError::TransformFailed { id: t.id.clone(), source })?;
        for &scale in &t.scales {
            if let std::collections::hash_map::Entry::Vacant(e) = resized.entry(scale.to_bits()) {
                e.insert(resize_fraction(img, scale)?);
            }
            let src = &resized[&scale.to_bits()];
            let mut run = |input: &NormalizedImage| -> Result<NormalizedImage, PipelineError> {
                let o = apply_transform_memo(t, input, cfg.seed, &mut memo)
                    .map_err(|source| PipelineError::TransformFailed { id: t.id.clone(), source })?;
                if !check_dims(def, input, &o) {
                    return Err(PipelineError::BadDimensions {
                        id: t.id.clone(),
                        input: (input.width(), input.height()),
                        got: (o.width(), o.height()),
                    });
                }
                Ok(o)
            };
            let first = run(src)?;
            // Fourier outputs are computed on the image and its rotation,
            // and each result is itself compressed in both orientations.
            let second = if def.fft_part().is_some() { Some(run(&rotate90(src))?) } else { None };
            for &codec in &t.codecs {
                let name = format!("c_{}_{codec}_{}", t.id, scale_label(scale));
                let mut size = rotavg(codec, &first, &name, sink);
                if let Some(second) = &second {
                    size = (size + rotavg(codec, second, &format!("{name}_t"), sink)) / 2.0;
                }
                out.push(size / base.bytes[&codec]);
            }
        }
    }
    out.extend(compute_stats(img, &cfg.stats)?);
    // reorder transform block from (scale, codec) loops to the schema's (codec, scale)
    let out = reorder_to_schema(cfg, out);
    let ids = cfg.feature_ids();
    for (id, &v) in ids.iter().zip(&out) {
        let bad = !v.is_finite() || (id.starts_with("c_") && v <= 0.0);
        if bad {
            return Err(PipelineError::InvalidValue { feature: id.clone(), value: v });
        }
    }
    Ok(out)
}

/// The transform loop above walks scales outermost; the schema lists codecs
/// outermost. Reorders each transform's block accordingly.
fn reorder_to_schema(cfg: &Config, computed: Vec<f64>) -> Vec<f64> {
    let nb = cfg.baseline.codecs.len() * cfg.baseline.scales.len();
    let mut out = computed[..nb].to_vec();
    let mut pos = nb;
    for t in &cfg.transforms {
        let (nc, ns) = (t.codecs.len(), t.scales.len());
        let block = &computed[pos..pos + nc * ns];
        for c in 0..nc {
            for s in 0..ns {
                out.push(block[s * nc + c]);
            }
        }
        pos += nc * ns;
    }
    out.extend_from_slice(&computed[pos..]);
    out
}

/// One manifest row.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRecord {
    pub id: String,
    pub path: PathBuf,
    /// artist, year, style, genre, medium and any extra columns.
    pub meta: BTreeMap<String, String>,
}

/// Reads a manifest CSV (`id,path,artist,year,style,genre,medium`, extra
/// columns kept as metadata). Relative paths resolve against the manifest's
/// directory.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRecord>, PipelineError> {
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut rd = csv::Reader::from_path(path).map_err(|e| PipelineError::Manifest(e.to_string()))?;
    let header: Vec<String> =
        rd.headers().map_err(|e| PipelineError::Manifest(e.to_string()))?.iter().map(String::from).collect();
    let col = |name: &str| header.iter().position(|h| h == name);
    let (Some(id_col), Some(path_col)) = (col("id"), col("path")) else {
        return Err(PipelineError::Manifest("header needs `id` and `path` columns".into()));
    };
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (n, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| PipelineError::Manifest(e.to_string()))?;
        let id = rec.get(id_col).unwrap_or("").to_string();
        if id.is_empty() || !seen.insert(id.clone()) {
            return Err(PipelineError::Manifest(format!("row {}: missing or duplicate id `{id}`", n + 1)));
        }
        let p = PathBuf::from(rec.get(path_col).unwrap_or(""));
        let p = if p.is_absolute() { p } else { base.join(p) };
        let mut meta = BTreeMap::new();
        for (k, v) in header.iter().zip(rec.iter()) {
            if k != "id" && k != "path" && !v.is_empty() {
                meta.insert(k.clone(), v.to_string());
            }
        }
        if let Some(y) = meta.get("year") {
            if y.parse::<i64>().is_err() {
                return Err(PipelineError::Manifest(format!("row {}: year `{y}` is not an integer", n + 1)));
            }
        }
        out.push(ManifestRecord { id, path: p, meta });
    }
    Ok(out)
}

/// Content-addressed store of computed vectors, keyed by image hash and
/// config hash.
#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Cache { dir: dir.into() }
    }

    /// `$CENSEMBLE_CACHE_DIR`, else `$XDG_CACHE_HOME/censemble`, else `~/.cache/censemble`.
    pub fn default_dir() -> Option<PathBuf> {
        if let Some(d) = std::env::var_os("CENSEMBLE_CACHE_DIR") {
            return Some(PathBuf::from(d));
        }
        if let Some(d) = std::env::var_os("XDG_CACHE_HOME") {
            return Some(PathBuf::from(d).join("censemble"));
        }
        std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".cache").join("censemble"))
    }

    fn path(&self, image_hash: &str, config_hash: &str) -> PathBuf {
        self.dir.join(&config_hash[..16.min(config_hash.len())]).join(format!("{image_hash}.f64"))
    }

    pub fn get(&self, image_hash: &str, config_hash: &str, len: usize) -> Option<Vec<f64>> {
        let bytes = fs::read(self.path(image_hash, config_hash)).ok()?;
        if bytes.len() != len * 8 {
            return None;
        }
        Some(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }

    pub fn put(&self, image_hash: &str, config_hash: &str, values: &[f64]) -> std::io::Result<()> {
        let path = self.path(image_hash, config_hash);
        fs::create_dir_all(path.parent().unwrap())?;
        let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
        // write-then-rename keeps concurrent readers from seeing partial files
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        fs::write(&tmp, bytes)?;
        fs::rename(tmp, path)
    }
}

#[derive(Debug, Clone, Default)]
pub struct CorpusOptions {
    pub workers: usize,
    pub cache: Option<Cache>,
    /// Directory receiving every encoded stream, one subdirectory per image.
    pub dump_streams: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRecord {
    pub id: String,
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct CorpusRun {
    pub matrix: CorpusMatrix,
    pub errors: Vec<ErrorRecord>,
    pub cache_hits: usize,
    pub computed: usize,
}

fn process(
    rec: &ManifestRecord,
    cfg: &Config,
    config_hash: &str,
    n_features: usize,
    opts: &CorpusOptions,
) -> Result<(Vec<f64>, bool), PipelineError> {
    let bytes = fs::read(&rec.path)?;
    let image_hash = hex::encode(Sha256::digest(&bytes));
    if let Some(cache) = &opts.cache {
        if let Some(v) = cache.get(&image_hash, config_hash, n_features) {
            return Ok((v, true));
        }
    }
    let img = load_and_normalize(&bytes, cfg.target_pixels)?;
    let sink = opts.dump_streams.as_ref().map(|d| DirSink { dir: d.join(&rec.id) });
    let v = compute_ensemble_with(&img, cfg, sink.as_ref().map(|s| s as &dyn StreamSink))?;
    if let Some(cache) = &opts.cache {
        if let Err(e) = cache.put(&image_hash, config_hash, &v) {
            log::warn!("cache write failed for {}: {e}", rec.id);
        }
    }
    Ok((v, false))
}

/// Computes vectors for every manifest record on a pool of `workers`
/// threads. Rows keep manifest order; failures become error records.
pub fn compute_corpus(records: &[ManifestRecord], cfg: &Config, opts: &CorpusOptions) -> Result<CorpusRun, PipelineError> {
    if records.is_empty() {
        return Err(PipelineError::EmptyCorpus);
    }
    cfg.validate().map_err(|e| PipelineError::Manifest(e.to_string()))?;
    let ids = cfg.feature_ids();
    let hash = cfg.hash();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .map_err(|e| PipelineError::Pool(e.to_string()))?;
    let done = AtomicUsize::new(0);
    let total = records.len();
    let results: Vec<Result<(Vec<f64>, bool), PipelineError>> = pool.install(|| {
        records
            .par_iter()
            .map(|rec| {
                let r = process(rec, cfg, &hash, ids.len(), opts);
                let k = done.fetch_add(1, Ordering::Relaxed) + 1;
                if k % 25 == 0 || k == total {
                    log::info!("{k}/{total} images");
                }
                r
            })
            .collect()
    });
    let mut matrix = CorpusMatrix::new(ids, hash);
    let mut errors = Vec::new();
    let (mut hits, mut computed) = (0, 0);
    for (rec, r) in records.iter().zip(results) {
        match r {
            Ok((v, hit)) => {
                if hit {
                    hits += 1;
                } else {
                    computed += 1;
                }
                matrix.push_row(rec.id.clone(), rec.meta.clone(), &v);
            }
            Err(e) => {
                log::warn!("{}: {e}", rec.id);
                errors.push(ErrorRecord { id: rec.id.clone(), path: rec.path.clone(), reason: e.to_string() });
            }
        }
    }
    Ok(CorpusRun { matrix, errors, cache_hits: hits, computed })
}

/// Appends rows of `new` to `existing`; both must come from the same config.
pub fn append_matrix(existing: &mut CorpusMatrix, new: &CorpusMatrix) -> Result<(), PipelineError> {
    check_schema(existing, new)?;
    for i in 0..new.n_rows() {
        existing.push_row(new.ids[i].clone(), new.meta[i].clone(), new.row(i));
    }
    Ok(())
}
