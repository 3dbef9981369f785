//! Corpus matrices: persistence (CSV and a binary column format) and
//! z-scoring.
//!
//! Binary layout (`bin`), all integers little-endian:
//!
//! ```text
//! "CENS1"
//! u64 rows, u64 features
//! str config_hash
//! features x str feature_id
//! features x u8 zero_variance flag
//! u64 meta_keys, meta_keys x str key
//! rows x (str id, meta_keys x str value)
//! features x rows x f64 (column blocks)
//! ```
//!
//! `str` is a u64 byte length followed by UTF-8 bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

pub const MAGIC: &[u8; 5] = b"CENS1";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed matrix file: {0}")]
    Format(String),
    #[error("group `{group}` has {rows} rows; at least 2 are needed")]
    GroupTooSmall { group: String, rows: usize },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("unknown row id `{0}`")]
    UnknownRow(String),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Bin,
}

impl Format {
    /// Guesses from the file extension (`.csv` or anything else as bin).
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Bin,
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "bin" => Ok(Format::Bin),
            other => Err(format!("unknown format `{other}`")),
        }
    }
}

/// Row-major matrix of ensemble vectors with per-row metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusMatrix {
    pub features: Vec<String>,
    pub config_hash: String,
    pub ids: Vec<String>,
    pub meta: Vec<BTreeMap<String, String>>,
    pub data: Vec<f64>,
    /// Columns that were constant when last standardized.
    pub zero_variance: Vec<bool>,
}

impl CorpusMatrix {
    pub fn new(features: Vec<String>, config_hash: String) -> Self {
        let n = features.len();
        CorpusMatrix {
            features,
            config_hash,
            ids: Vec::new(),
            meta: Vec::new(),
            data: Vec::new(),
            zero_variance: vec![false; n],
        }
    }

    pub fn push_row(&mut self, id: String, meta: BTreeMap<String, String>, values: &[f64]) {
        assert_eq!(values.len(), self.features.len(), "row length must match schema");
        self.ids.push(id);
        self.meta.push(meta);
        self.data.extend_from_slice(values);
    }

    pub fn n_rows(&self) -> usize {
        self.ids.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.n_features();
        &self.data[i * d..(i + 1) * d]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_features() + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|i| self.get(i, j)).collect()
    }

    pub fn row_index(&self, id: &str) -> Result<usize, StoreError> {
        self.ids.iter().position(|r| r == id).ok_or_else(|| StoreError::UnknownRow(id.to_string()))
    }

    pub fn feature_index(&self, id: &str) -> Result<usize, StoreError> {
        self.features.iter().position(|f| f == id).ok_or_else(|| StoreError::UnknownFeature(id.to_string()))
    }

    pub fn meta_value(&self, i: usize, key: &str) -> Option<&str> {
        self.meta[i].get(key).map(String::as_str).filter(|v| !v.is_empty())
    }

    /// Keeps only the listed columns, in the given order.
    pub fn select_features(&self, cols: &[usize]) -> CorpusMatrix {
        let mut out = CorpusMatrix::new(cols.iter().map(|&j| self.features[j].clone()).collect(), self.config_hash.clone());
        out.zero_variance = cols.iter().map(|&j| self.zero_variance[j]).collect();
        for i in 0..self.n_rows() {
            let row: Vec<f64> = cols.iter().map(|&j| self.get(i, j)).collect();
            out.push_row(self.ids[i].clone(), self.meta[i].clone(), &row);
        }
        out
    }

    /// Keeps only the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> CorpusMatrix {
        let mut out = CorpusMatrix::new(self.features.clone(), self.config_hash.clone());
        out.zero_variance = self.zero_variance.clone();
        for &i in rows {
            out.push_row(self.ids[i].clone(), self.meta[i].clone(), self.row(i));
        }
        out
    }

    /// Fills metadata from `records` (id -> key/values) for matching rows.
    pub fn attach_meta(&mut self, records: &BTreeMap<String, BTreeMap<String, String>>) {
        for (i, id) in self.ids.iter().enumerate() {
            if let Some(m) = records.get(id) {
                for (k, v) in m {
                    self.meta[i].insert(k.clone(), v.clone());
                }
            }
        }
    }

    fn meta_keys(&self) -> Vec<String> {
        let keys: BTreeSet<&String> = self.meta.iter().flat_map(|m| m.keys()).collect();
        keys.into_iter().cloned().collect()
    }
}

/// Shortest text that parses back to the same `f64`.
fn float_text(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_matrix(m: &CorpusMatrix, path: &Path, format: Format) -> Result<(), StoreError> {
    let file = BufWriter::new(File::create(path)?);
    match format {
        Format::Csv => write_csv(m, file),
        Format::Bin => write_bin(m, file),
    }
}

pub fn read_matrix(path: &Path) -> Result<CorpusMatrix, StoreError> {
    let mut file = BufReader::new(File::open(path)?);
    let mut head = [0u8; 5];
    let n = read_up_to(&mut file, &mut head)?;
    let file = BufReader::new(File::open(path)?);
    if n == 5 && &head == MAGIC {
        read_bin(file)
    } else {
        read_csv(file)
    }
}

fn read_up_to(r: &mut impl Read, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut n = 0;
    while n < buf.len() {
        let k = r.read(&mut buf[n..])?;
        if k == 0 {
            break;
        }
        n += k;
    }
    Ok(n)
}

/// Header `id` followed by feature ids; one row per image.
pub fn write_csv(m: &CorpusMatrix, w: impl Write) -> Result<(), StoreError> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["id".to_string()];
    header.extend(m.features.iter().cloned());
    wr.write_record(&header)?;
    for i in 0..m.n_rows() {
        let mut rec = vec![m.ids[i].clone()];
        rec.extend(m.row(i).iter().map(|&v| float_text(v)));
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_csv(r: impl Read) -> Result<CorpusMatrix, StoreError> {
    let mut rd = csv::Reader::from_reader(r);
    let header: Vec<String> = rd.headers()?.iter().map(String::from).collect();
    if header.first().map(String::as_str) != Some("id") {
        return Err(StoreError::Format("csv header must start with `id`".into()));
    }
    let mut m = CorpusMatrix::new(header[1..].to_vec(), String::new());
    for rec in rd.records() {
        let rec = rec?;
        let vals: Result<Vec<f64>, _> = rec.iter().skip(1).map(str::parse::<f64>).collect();
        let vals = vals.map_err(|e| StoreError::Format(format!("row {}: {e}", m.n_rows() + 1)))?;
        if vals.len() != m.n_features() {
            return Err(StoreError::Format(format!("row {} has {} values", m.n_rows() + 1, vals.len())));
        }
        m.push_row(rec[0].to_string(), BTreeMap::new(), &vals);
    }
    Ok(m)
}

fn put_u64(w: &mut impl Write, v: u64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn put_str(w: &mut impl Write, s: &str) -> std::io::Result<()> {
    put_u64(w, s.len() as u64)?;
    w.write_all(s.as_bytes())
}

pub fn write_bin(m: &CorpusMatrix, mut w: impl Write) -> Result<(), StoreError> {
    w.write_all(MAGIC)?;
    put_u64(&mut w, m.n_rows() as u64)?;
    put_u64(&mut w, m.n_features() as u64)?;
    put_str(&mut w, &m.config_hash)?;
    for f in &m.features {
        put_str(&mut w, f)?;
    }
    let flags: Vec<u8> = m.zero_variance.iter().map(|&z| z as u8).collect();
    w.write_all(&flags)?;
    let keys = m.meta_keys();
    put_u64(&mut w, keys.len() as u64)?;
    for k in &keys {
        put_str(&mut w, k)?;
    }
    for i in 0..m.n_rows() {
        put_str(&mut w, &m.ids[i])?;
        for k in &keys {
            put_str(&mut w, m.meta[i].get(k).map(String::as_str).unwrap_or(""))?;
        }
    }
    for j in 0..m.n_features() {
        for i in 0..m.n_rows() {
            w.write_all(&m.get(i, j).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

struct BinReader<R> {
    r: R,
}

impl<R: Read> BinReader<R> {
    fn u64(&mut self) -> Result<u64, StoreError> {
        let mut b = [0u8; 8];
        self.r.read_exact(&mut b).map_err(|_| StoreError::Format("truncated file".into()))?;
        Ok(u64::from_le_bytes(b))
    }

    fn count(&mut self, what: &str) -> Result<usize, StoreError> {
        let v = self.u64()?;
        // guards allocation on corrupt headers
        if v > 1 << 32 {
            return Err(StoreError::Format(format!("implausible {what} {v}")));
        }
        Ok(v as usize)
    }

    fn string(&mut self) -> Result<String, StoreError> {
        let n = self.count("string length")?;
        let mut b = vec![0u8; n];
        self.r.read_exact(&mut b).map_err(|_| StoreError::Format("truncated file".into()))?;
        String::from_utf8(b).map_err(|_| StoreError::Format("invalid utf-8".into()))
    }
}

pub fn read_bin(r: impl Read) -> Result<CorpusMatrix, StoreError> {
    let mut br = BinReader { r };
    let mut magic = [0u8; 5];
    br.r.read_exact(&mut magic).map_err(|_| StoreError::Format("truncated file".into()))?;
    if &magic != MAGIC {
        return Err(StoreError::Format("bad magic".into()));
    }
    let rows = br.count("row count")?;
    let nf = br.count("feature count")?;
    let hash = br.string()?;
    let features = (0..nf).map(|_| br.string()).collect::<Result<Vec<_>, _>>()?;
    let mut flags = vec![0u8; nf];
    br.r.read_exact(&mut flags).map_err(|_| StoreError::Format("truncated file".into()))?;
    let nk = br.count("meta key count")?;
    let keys = (0..nk).map(|_| br.string()).collect::<Result<Vec<_>, _>>()?;
    let mut m = CorpusMatrix::new(features, hash);
    m.zero_variance = flags.iter().map(|&f| f != 0).collect();
    for _ in 0..rows {
        m.ids.push(br.string()?);
        let mut meta = BTreeMap::new();
        for k in &keys {
            let v = br.string()?;
            if !v.is_empty() {
                meta.insert(k.clone(), v);
            }
        }
        m.meta.push(meta);
    }
    m.data = vec![0.0; rows * nf];
    let mut b = [0u8; 8];
    for j in 0..nf {
        for i in 0..rows {
            br.r.read_exact(&mut b).map_err(|_| StoreError::Format("truncated file".into()))?;
            m.data[i * nf + j] = f64::from_le_bytes(b);
        }
    }
    Ok(m)
}

/// Standardizes every column to mean 0, sd 1 (population), globally or
/// within groups of rows sharing the `group_by` metadata value. Columns
/// constant within any group are set to 0 there and flagged.
pub fn zscore_matrix(m: &CorpusMatrix, group_by: Option<&str>) -> Result<CorpusMatrix, StoreError> {
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for i in 0..m.n_rows() {
        let g = match group_by {
            Some(k) => m.meta_value(i, k).unwrap_or("").to_string(),
            None => String::new(),
        };
        groups.entry(g).or_default().push(i);
    }
    for (g, rows) in &groups {
        if rows.len() < 2 {
            return Err(StoreError::GroupTooSmall { group: g.clone(), rows: rows.len() });
        }
    }
    let d = m.n_features();
    let mut out = m.clone();
    out.zero_variance = vec![false; d];
    for rows in groups.values() {
        let n = rows.len() as f64;
        for j in 0..d {
            let mean = rows.iter().map(|&i| m.get(i, j)).sum::<f64>() / n;
            let var = rows.iter().map(|&i| (m.get(i, j) - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            // relative to magnitude: rounding noise on a constant column is not variance
            let scale = rows.iter().map(|&i| m.get(i, j).abs()).fold(0.0, f64::max);
            if sd <= 1e-12 * scale {
                out.zero_variance[j] = true;
                for &i in rows {
                    out.data[i * d + j] = 0.0;
                }
            } else {
                for &i in rows {
                    out.data[i * d + j] = (m.get(i, j) - mean) / sd;
                }
            }
        }
    }
    Ok(out)
}

/// Fails unless both matrices share config hash and feature ids.
pub fn check_schema(a: &CorpusMatrix, b: &CorpusMatrix) -> Result<(), StoreError> {
    if a.features != b.features {
        return Err(StoreError::SchemaMismatch("feature ids differ".into()));
    }
    if a.config_hash != b.config_hash {
        return Err(StoreError::SchemaMismatch(format!(
            "config hash {} vs {}",
            a.config_hash, b.config_hash
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CorpusMatrix {
        let mut m = CorpusMatrix::new(vec!["a".into(), "b".into(), "c".into()], "h".into());
        for i in 0..6 {
            let mut meta = BTreeMap::new();
            meta.insert("artist".to_string(), format!("x{}", i % 2));
            let v = [i as f64 * 0.1 + 1e-17, 7.0, (i * i) as f64 / 3.0];
            m.push_row(format!("r{i}"), meta, &v);
        }
        m
    }

    #[test]
    fn bin_round_trip_is_exact() {
        let m = sample();
        let mut buf = Vec::new();
        write_bin(&m, &mut buf).unwrap();
        assert_eq!(&buf[..5], b"CENS1");
        assert_eq!(read_bin(&buf[..]).unwrap(), m);
    }

    #[test]
    fn csv_round_trip_values() {
        let m = sample();
        let mut buf = Vec::new();
        write_csv(&m, &mut buf).unwrap();
        assert!(buf.starts_with(b"id,"));
        let back = read_csv(&buf[..]).unwrap();
        assert_eq!(back.data, m.data);
        assert_eq!(back.ids, m.ids);
    }

    #[test]
    fn zscore_global_and_grouped() {
        let m = sample();
        let z = zscore_matrix(&m, None).unwrap();
        for j in [0, 2] {
            let c = z.column(j);
            let mean = c.iter().sum::<f64>() / 6.0;
            let sd = (c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 6.0).sqrt();
            assert!(mean.abs() < 1e-9 && (sd - 1.0).abs() < 1e-9);
        }
        assert!(z.column(1).iter().all(|&v| v == 0.0));
        assert_eq!(z.zero_variance, vec![false, true, false]);
        let g = zscore_matrix(&m, Some("artist")).unwrap();
        for grp in ["x0", "x1"] {
            let rows: Vec<usize> = (0..6).filter(|&i| g.meta_value(i, "artist") == Some(grp)).collect();
            let mean = rows.iter().map(|&i| g.get(i, 0)).sum::<f64>() / rows.len() as f64;
            assert!(mean.abs() < 1e-9);
        }
    }

    #[test]
    fn zscore_is_idempotent() {
        let z = zscore_matrix(&sample(), None).unwrap();
        let zz = zscore_matrix(&z, None).unwrap();
        for (a, b) in z.data.iter().zip(&zz.data) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn small_group_rejected() {
        let mut m = sample();
        m.meta[0].insert("artist".into(), "solo".into());
        assert!(matches!(zscore_matrix(&m, Some("artist")), Err(StoreError::GroupTooSmall { .. })));
    }
}
