use std::fs;
use std::path::Path;

use censemble::codecs::CodecId;
use censemble::config::Config;
use censemble::imageio::NormalizedImage;
use censemble::pipeline::{compute_baselines, compute_corpus, compute_ensemble, read_manifest, Cache, CorpusOptions};
use censemble::store::{write_matrix, Format};
use censemble::transforms::lookup;

fn small_config(ids: &[&str]) -> Config {
    let mut cfg = Config { target_pixels: 10_000, ..Config::default() };
    cfg.transforms = ids.iter().map(|id| lookup(id).unwrap().default_spec()).collect();
    cfg.validate().unwrap();
    cfg
}

fn column(cfg: &Config, v: &[f64], id: &str) -> f64 {
    let j = cfg.feature_ids().iter().position(|f| f == id).unwrap_or_else(|| panic!("no feature {id}"));
    v[j]
}

fn textured(w: usize, h: usize, color: bool) -> NormalizedImage {
    NormalizedImage::from_fn(w, h, |x, y| {
        let v = ((x * 7 + y * 13) ^ (x * y)) as u8;
        if color {
            [v, v.wrapping_mul(3), 255 - v]
        } else {
            [v; 3]
        }
    })
}

#[test]
fn identity_ratio_is_one() {
    let cfg = small_config(&["identity"]);
    for img in [textured(100, 100, true), textured(90, 110, false), NormalizedImage::filled(100, 100, [3, 90, 200])] {
        let v = compute_ensemble(&img, &cfg).unwrap();
        assert_eq!(column(&cfg, &v, "c_identity_gif_1"), 1.0);
    }
}

#[test]
fn grayscale_ratio_on_gray_and_color_inputs() {
    let cfg = small_config(&["colors_grayscale"]);
    let gray = compute_ensemble(&textured(100, 100, false), &cfg).unwrap();
    assert_eq!(column(&cfg, &gray, "c_colors_grayscale_gif_1"), 1.0);
    let color = compute_ensemble(&textured(100, 100, true), &cfg).unwrap();
    assert!(column(&cfg, &color, "c_colors_grayscale_gif_1") < 1.0);
}

#[test]
fn raw_size_and_baseline_ordering() {
    let cfg = Config::default();
    let img = textured(400, 400, true);
    let b = compute_baselines(&img, &cfg).unwrap();
    assert_eq!(b.f, 480_000.0);
    assert!(b.bytes[&CodecId::Jpeg0] <= b.bytes[&CodecId::Jpeg100]);
    let flat = compute_baselines(&NormalizedImage::filled(400, 400, [120, 40, 10]), &cfg).unwrap();
    assert!(flat.ratios.iter().all(|&r| r < 0.05), "{:?}", flat.ratios);
}

#[test]
fn full_vector_has_schema_length_and_is_finite() {
    let cfg = Config { target_pixels: 16_384, ..Config::default() };
    let img = textured(128, 128, true);
    let v = compute_ensemble(&img, &cfg).unwrap();
    assert_eq!(v.len(), cfg.feature_ids().len());
    assert!(v.iter().all(|x| x.is_finite()));
}

fn write_png(path: &Path, img: &NormalizedImage) {
    image::save_buffer(path, img.as_bytes(), img.width() as u32, img.height() as u32, image::ExtendedColorType::Rgb8).unwrap();
}

fn small_corpus(dir: &Path, n: usize) -> Vec<censemble::pipeline::ManifestRecord> {
    let mut csv = String::from("id,path,artist,year,style\n");
    for i in 0..n {
        let img = NormalizedImage::from_fn(100, 100, |x, y| [(x * (i + 1)) as u8, (y * 3 + i) as u8, ((x ^ y) * 5) as u8]);
        write_png(&dir.join(format!("img{i}.png")), &img);
        csv.push_str(&format!("img{i},img{i}.png,a{},{},s{}\n", i % 3, 1900 + i, i % 2));
    }
    fs::write(dir.join("bad.png"), b"not an image").unwrap();
    csv.push_str("bad,bad.png,a0,1950,s0\n");
    fs::write(dir.join("manifest.csv"), csv).unwrap();
    read_manifest(&dir.join("manifest.csv")).unwrap()
}

#[test]
fn worker_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let records = small_corpus(dir.path(), 6);
    let cfg = small_config(&["identity", "blur10", "lines_bw_canny", "fx_noise", "fft2"]);
    let mut outputs = Vec::new();
    for workers in [1, 8] {
        let run = compute_corpus(&records, &cfg, &CorpusOptions { workers, ..Default::default() }).unwrap();
        let path = dir.path().join(format!("w{workers}.bin"));
        write_matrix(&run.matrix, &path, Format::Bin).unwrap();
        outputs.push(fs::read(path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn unreadable_file_becomes_error_record() {
    let dir = tempfile::tempdir().unwrap();
    let records = small_corpus(dir.path(), 2);
    let cfg = small_config(&["identity"]);
    let run = compute_corpus(&records, &cfg, &CorpusOptions { workers: 1, ..Default::default() }).unwrap();
    assert_eq!(run.matrix.n_rows(), 2);
    assert_eq!(run.errors.len(), 1);
    assert_eq!(run.errors[0].id, "bad");
    assert_eq!(run.matrix.meta_value(1, "style"), Some("s1"));
}

#[test]
fn cache_serves_identical_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let records = small_corpus(dir.path(), 3);
    let cfg = small_config(&["identity", "blur10"]);
    let opts = CorpusOptions { workers: 1, cache: Some(Cache::new(dir.path().join("cache"))), dump_streams: None };
    let first = compute_corpus(&records, &cfg, &opts).unwrap();
    assert_eq!((first.computed, first.cache_hits), (3, 0));
    let second = compute_corpus(&records, &cfg, &opts).unwrap();
    assert_eq!((second.computed, second.cache_hits), (0, 3));
    assert_eq!(first.matrix.data, second.matrix.data);
    // a different config must miss
    let other = small_config(&["identity"]);
    let third = compute_corpus(&records, &other, &opts).unwrap();
    assert_eq!(third.cache_hits, 0);
}

#[test]
fn dumped_streams_decode_and_match_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let records = small_corpus(dir.path(), 1);
    let cfg = small_config(&["identity", "blur10"]);
    let dump = dir.path().join("streams");
    let opts = CorpusOptions { workers: 1, cache: None, dump_streams: Some(dump.clone()) };
    let with = compute_corpus(&records[..1], &cfg, &opts).unwrap();
    let without = compute_corpus(&records[..1], &cfg, &CorpusOptions { workers: 1, ..Default::default() }).unwrap();
    assert_eq!(with.matrix.data, without.matrix.data);
    let mut n = 0;
    for entry in fs::read_dir(dump.join("img0")).unwrap() {
        let path = entry.unwrap().path();
        let bytes = fs::read(&path).unwrap();
        match path.extension().and_then(|e| e.to_str()) {
            Some("gif") => {
                let mut opts = gif::DecodeOptions::new();
                opts.set_color_output(gif::ColorOutput::RGBA);
                let mut d = opts.read_info(bytes.as_slice()).unwrap();
                assert!(d.read_next_frame().unwrap().is_some(), "{}", path.display());
            }
            Some("png") => {
                let mut d = png::Decoder::new(std::io::Cursor::new(bytes)).read_info().unwrap();
                let mut buf = vec![0; d.output_buffer_size().unwrap()];
                d.next_frame(&mut buf).unwrap();
            }
            Some("jpg") => assert_eq!(&bytes[..2], &[0xFF, 0xD8]),
            other => panic!("unexpected stream {other:?}"),
        }
        n += 1;
    }
    assert!(n > 10, "only {n} streams");
}
