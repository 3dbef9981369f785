use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use censemble::config::Config;

const SUBCOMMANDS: &[&str] = &[
    "extract", "zscore", "pca", "knn", "arith", "classify", "importance", "stepwise", "norms", "temporal", "trend",
    "synth", "list-transforms",
];

fn censemble(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_censemble")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn help_and_usage_exit_codes() {
    assert_eq!(code(&censemble(&["--help"])), 0);
    for sub in SUBCOMMANDS {
        let o = censemble(&[sub, "--help"]);
        assert_eq!(code(&o), 0, "{sub} --help");
        assert!(stdout(&o).contains("Usage"), "{sub}");
    }
    assert_eq!(code(&censemble(&["no-such-command"])), 1);
    assert_eq!(code(&censemble(&["knn", "--k", "3"])), 1);
    assert_eq!(code(&censemble(&["synth", "--out", "x", "--size", "big"])), 1);
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.bin");
    assert_eq!(code(&censemble(&["knn", "--in", missing.to_str().unwrap(), "--query", "a"])), 2);
    let manifest = dir.path().join("m.csv");
    fs::write(&manifest, "id,path,year\na,a.png,nineteen\n").unwrap();
    let out = dir.path().join("v.csv");
    let o = censemble(&["extract", "--manifest", manifest.to_str().unwrap(), "--out", out.to_str().unwrap(), "--no-cache"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn shipped_default_config_matches_builtin() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../default.cfg");
    let cfg = Config::load(&path).unwrap();
    assert_eq!(cfg, Config::default());
    assert_eq!(cfg.hash(), Config::default().hash());
}

#[test]
fn list_transforms_covers_registry() {
    let o = censemble(&["list-transforms"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.starts_with("id,codecs,scales,params,default,description"));
    assert_eq!(text.lines().count() - 1, censemble::transforms::REGISTRY.len());
}

#[test]
fn end_to_end_small_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let cfg = Config { target_pixels: 4096, ..Config::default() };
    let mut cfg = cfg;
    cfg.transforms.retain(|t| ["blur10", "colors_grayscale", "lines_bw_canny", "fft1"].contains(&t.id.as_str()));
    fs::write(d("small.cfg"), cfg.to_toml()).unwrap();

    let o = censemble(&["synth", "--out", &d("corpus"), "--per-family", "6", "--size", "64x64", "--years", "1900:1960"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = d("corpus/manifest.csv");

    let o = censemble(&[
        "extract", "--manifest", &manifest, "--config", &d("small.cfg"), "--out", &d("v.bin"), "--workers", "2",
        "--cache", &d("cache"),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("rows 30"));
    let o = censemble(&[
        "extract", "--manifest", &manifest, "--config", &d("small.cfg"), "--out", &d("v2.bin"), "--cache", &d("cache"),
    ]);
    assert!(stdout(&o).contains("cached 30"));
    assert_eq!(fs::read(d("v.bin")).unwrap(), fs::read(d("v2.bin")).unwrap());

    let v = d("v.bin");
    let o = censemble(&["knn", "--in", &v, "--query", "stripes_0002", "--k", "5", "--exclude-artist"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 6);
    assert!(!text.contains("stripes_0002,"));

    let o = censemble(&["pca", "--in", &v, "--zscore", "--k", "2", "--loadings", &d("load.csv")]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().count(), 31);
    assert!(fs::read_to_string(d("load.csv")).unwrap().starts_with("feature,pc1,pc2"));

    let o = censemble(&["classify", "--in", &v, "--zscore", "--train-n", "4", "--replicates", "3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = censemble(&["classify", "--in", &v, "--train-n", "6", "--replicates", "1"]);
    assert_eq!(code(&o), 2, "no test rows left is a data error");

    let o = censemble(&["importance", "--in", &v, "--zscore"]);
    assert!(stdout(&o).lines().nth(1).unwrap().contains("b_gif_1"));

    let o = censemble(&["temporal", "--in", &v, "--zscore", "--k", "5", "--svg", &d("t.svg")]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(fs::read_to_string(d("t.svg")).unwrap().starts_with("<svg"));

    let o = censemble(&["trend", "--in", &v, "--value", "pc1", "--min-n", "5", "--svg", &d("trend.svg")]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    // csv matrices need the manifest for metadata
    let o = censemble(&["zscore", "--in", &v, "--out", &d("z.csv")]);
    assert_eq!(code(&o), 0);
    let o = censemble(&["classify", "--in", &d("z.csv"), "--train-n", "4", "--replicates", "2"]);
    assert_eq!(code(&o), 2);
    let o = censemble(&["classify", "--in", &d("z.csv"), "--manifest", &manifest, "--train-n", "4", "--replicates", "2"]);
    assert_eq!(code(&o), 0);

    let mut scores = String::from("id,score\n");
    for line in fs::read_to_string(&manifest).unwrap().lines().skip(1) {
        let id = line.split(',').next().unwrap();
        scores.push_str(&format!("{id},{}\n", id.len() % 5));
    }
    fs::write(d("scores.csv"), scores).unwrap();
    let o = censemble(&["norms", "--in", &v, "--zscore", "--features", "b_", "--scores", &d("scores.csv"), "--folds", "5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("n,d,r2,adjusted_r2"));
}
