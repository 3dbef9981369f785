//! Command-line front end. [`run`] parses arguments, dispatches to a
//! subcommand and maps failures to exit codes: 0 success, 1 usage, 2 data.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::analysis::{
    self, classify, cosine_knn, feature_importance, linreg_fit_eval, pca_fit, rolling_trend, stepwise_accuracy,
    temporal_resemblance, vector_arith, AnalysisError, StepwiseOptions, TemporalOptions, TrendOptions,
};
use crate::config::{Config, ConfigError};
use crate::pipeline::{append_matrix, compute_corpus, read_manifest, Cache, CorpusOptions, PipelineError};
use crate::plot::{Chart, Line};
use crate::store::{read_matrix, write_matrix, zscore_matrix, CorpusMatrix, Format, StoreError};
use crate::synth::{default_specs, generate_corpus, Drift, Family, SynthError, SynthFamilySpec, SynthOptions};
use crate::transforms::REGISTRY;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    /// Bad flag values found after parsing.
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "censemble", version, about = "Compression-ensemble feature vectors and their analyses")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute ensemble vectors for every image in a manifest.
    Extract(ExtractArgs),
    /// Standardize feature columns, optionally within metadata groups.
    Zscore(ZscoreArgs),
    /// Principal component coordinates and loadings.
    Pca(PcaArgs),
    /// Cosine nearest neighbors of a row.
    Knn(KnnArgs),
    /// Nearest neighbors of an element-wise vector expression.
    Arith(ArithArgs),
    /// Repeated train/test LDA accuracy and confusion counts.
    Classify(ClassifyArgs),
    /// Pairwise logistic importance ordering of features.
    Importance(ImportanceArgs),
    /// LDA accuracy by training size and number of leading features.
    Stepwise(StepwiseArgs),
    /// Regress human norm scores on vectors.
    Norms(NormsArgs),
    /// Temporal resemblance scores per artwork.
    Temporal(TemporalArgs),
    /// Rolling quantiles of a value over time.
    Trend(TrendArgs),
    /// Generate a labelled synthetic image corpus.
    Synth(SynthArgs),
    /// Print the transform registry.
    ListTransforms(ListArgs),
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// TOML config; the built-in default when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// csv or bin; guessed from the extension when omitted.
    #[arg(long)]
    pub format: Option<Format>,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Cache directory (default: $CENSEMBLE_CACHE_DIR or the user cache dir).
    #[arg(long)]
    pub cache: Option<PathBuf>,
    #[arg(long)]
    pub no_cache: bool,
    /// Write every encoded stream under this directory.
    #[arg(long)]
    pub dump_streams: Option<PathBuf>,
    /// Add rows to an existing matrix at `--out` built with the same config.
    #[arg(long)]
    pub append: bool,
    /// Where failed images are listed (default `<out>.errors.csv`).
    #[arg(long)]
    pub errors: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Matrix file (csv or bin).
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Standardize columns before the analysis.
    #[arg(long)]
    pub zscore: bool,
    /// Keep only features whose id starts with one of these prefixes.
    #[arg(long, value_delimiter = ',')]
    pub features: Vec<String>,
    /// Manifest whose metadata is attached by id (csv matrices carry none).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ZscoreArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub group_by: Option<String>,
    #[arg(long)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct PcaArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Coordinates CSV (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub loadings: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KnnArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Row id to query.
    #[arg(long)]
    pub query: String,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Skip rows sharing the query's artist (and the query itself).
    #[arg(long)]
    pub exclude_artist: bool,
    #[arg(long, default_value = "artist")]
    pub artist_key: String,
}

#[derive(Debug, Args)]
pub struct ArithArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// e.g. `img4 + img6` or `mondrian * mean(genre=landscape)`.
    #[arg(long)]
    pub expr: String,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Leave out rows named in the expression.
    #[arg(long)]
    pub exclude_operands: bool,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value = "style")]
    pub label: String,
    #[arg(long, default_value_t = 100)]
    pub train_n: usize,
    /// Test rows per class (all remaining when omitted).
    #[arg(long)]
    pub test_n: Option<usize>,
    #[arg(long, default_value_t = 100)]
    pub replicates: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Confusion counts summed over replicates.
    #[arg(long)]
    pub confusion: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ImportanceArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value = "style")]
    pub label: String,
    /// Feature always ranked first when present.
    #[arg(long, default_value = "b_gif_1")]
    pub first: String,
    #[arg(long)]
    pub max_per_class: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct StepwiseArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value = "style")]
    pub label: String,
    #[arg(long, value_delimiter = ',', default_value = "10,30,100")]
    pub train_sizes: Vec<usize>,
    #[arg(long)]
    pub test_n: Option<usize>,
    /// Prefix lengths to evaluate (all when omitted).
    #[arg(long, value_delimiter = ',')]
    pub feature_counts: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub replicates: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = "b_gif_1")]
    pub first: String,
}

#[derive(Debug, Args)]
pub struct NormsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// CSV with an id column and a numeric score column.
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long, default_value = "id")]
    pub id_col: String,
    #[arg(long, default_value = "score")]
    pub score_col: String,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TemporalArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 100)]
    pub k: usize,
    #[arg(long, default_value = "year")]
    pub year_key: String,
    #[arg(long, default_value = "artist")]
    pub artist_key: String,
    /// `FROM:TO` years used to fit the smoother.
    #[arg(long)]
    pub fit_range: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrendArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// A feature id, or `pc1` / `pc2` for principal components of the
    /// standardized matrix.
    #[arg(long, default_value = "pc1")]
    pub value: String,
    #[arg(long, default_value = "year")]
    pub time_key: String,
    #[arg(long, default_value_t = 10)]
    pub half_window: u32,
    #[arg(long, default_value_t = 50)]
    pub max_half_window: u32,
    #[arg(long, default_value_t = 1000)]
    pub min_n: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub per_family: usize,
    /// Comma-separated subset of the families (all when omitted).
    #[arg(long, value_delimiter = ',')]
    pub families: Vec<String>,
    /// `FROM:TO`.
    #[arg(long, default_value = "1800:1990")]
    pub years: String,
    /// `WIDTHxHEIGHT`.
    #[arg(long, default_value = "400x400")]
    pub size: String,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// `FAMILY:PARAM:SLOPE:YEAR0`, repeatable.
    #[arg(long)]
    pub drift: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ListArgs {
    /// Show the transforms of this config instead of the registry.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Parses `argv` (including the program name) and runs it.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Extract(a) => extract(a),
        Command::Zscore(a) => {
            let m = read_matrix(&a.input)?;
            let z = zscore_matrix(&m, a.group_by.as_deref())?;
            write_matrix(&z, &a.out, a.format.unwrap_or_else(|| Format::from_path(&a.out)))?;
            println!("{} rows, {} zero-variance columns", z.n_rows(), z.zero_variance.iter().filter(|&&v| v).count());
            Ok(())
        }
        Command::Pca(a) => pca(a),
        Command::Knn(a) => knn(a),
        Command::Arith(a) => arith(a),
        Command::Classify(a) => classify_cmd(a),
        Command::Importance(a) => importance(a),
        Command::Stepwise(a) => stepwise(a),
        Command::Norms(a) => norms(a),
        Command::Temporal(a) => temporal(a),
        Command::Trend(a) => trend(a),
        Command::Synth(a) => synth(a),
        Command::ListTransforms(a) => list_transforms(a),
    }
}

fn out_writer(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn load(a: &InputArgs) -> Result<CorpusMatrix, CliError> {
    let mut m = read_matrix(&a.input)?;
    if let Some(p) = &a.manifest {
        let meta: BTreeMap<String, BTreeMap<String, String>> =
            read_manifest(p)?.into_iter().map(|r| (r.id, r.meta)).collect();
        m.attach_meta(&meta);
    }
    if !a.features.is_empty() {
        let cols: Vec<usize> = (0..m.n_features())
            .filter(|&j| a.features.iter().any(|p| m.features[j].starts_with(p.as_str())))
            .collect();
        if cols.is_empty() {
            return Err(CliError::Usage(format!("no feature matches {:?}", a.features)));
        }
        m = m.select_features(&cols);
    }
    if a.zscore {
        m = zscore_matrix(&m, None)?;
    }
    Ok(m)
}

fn parse_range(s: &str) -> Result<(f64, f64), CliError> {
    let (a, b) = s.split_once(':').ok_or_else(|| CliError::Usage(format!("expected FROM:TO, got `{s}`")))?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("bad number `{v}`")));
    Ok((parse(a)?, parse(b)?))
}

fn extract(a: ExtractArgs) -> Result<(), CliError> {
    let cfg = match &a.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let records = read_manifest(&a.manifest)?;
    let cache = if a.no_cache {
        None
    } else {
        a.cache.clone().map(Cache::new).or_else(|| Cache::default_dir().map(Cache::new))
    };
    let opts = CorpusOptions { workers: a.workers.max(1), cache, dump_streams: a.dump_streams.clone() };
    let run = compute_corpus(&records, &cfg, &opts)?;
    let format = a.format.unwrap_or_else(|| Format::from_path(&a.out));
    let mut matrix = run.matrix;
    if a.append && a.out.exists() {
        let mut existing = read_matrix(&a.out)?;
        append_matrix(&mut existing, &matrix)?;
        matrix = existing;
    }
    write_matrix(&matrix, &a.out, format)?;
    if !run.errors.is_empty() {
        let path = a.errors.clone().unwrap_or_else(|| {
            let mut p = a.out.clone().into_os_string();
            p.push(".errors.csv");
            PathBuf::from(p)
        });
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["id", "path", "reason"])?;
        for e in &run.errors {
            w.write_record([e.id.as_str(), &e.path.display().to_string(), e.reason.as_str()])?;
        }
        w.flush()?;
        eprintln!("{} images failed; see {}", run.errors.len(), path.display());
    }
    println!(
        "rows {} features {} errors {} computed {} cached {} config {}",
        matrix.n_rows(),
        matrix.n_features(),
        run.errors.len(),
        run.computed,
        run.cache_hits,
        &cfg.hash()[..12]
    );
    Ok(())
}

fn pca(a: PcaArgs) -> Result<(), CliError> {
    let m = load(&a.input)?;
    let model = pca_fit(&m, a.k)?;
    let mut w = csv::Writer::from_writer(out_writer(a.out.as_deref())?);
    let k = model.components.len();
    let mut header = vec!["id".to_string()];
    header.extend((1..=k).map(|c| format!("pc{c}")));
    w.write_record(&header)?;
    for i in 0..m.n_rows() {
        let mut rec = vec![m.ids[i].clone()];
        rec.extend(model.project_row(m.row(i)).iter().map(|v| format!("{v:?}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    if let Some(p) = &a.loadings {
        let mut lw = csv::Writer::from_path(p)?;
        lw.write_record(header.iter().map(|h| if h == "id" { "feature" } else { h.as_str() }))?;
        for (j, f) in m.features.iter().enumerate() {
            let mut rec = vec![f.clone()];
            rec.extend(model.components.iter().map(|c| format!("{:?}", c[j])));
            lw.write_record(&rec)?;
        }
        lw.flush()?;
    }
    let ratios: Vec<String> = model.explained_ratio().iter().map(|r| format!("{r:.4}")).collect();
    eprintln!("explained variance ratio: {}", ratios.join(" "));
    Ok(())
}

fn write_neighbors(hits: &[analysis::Neighbor]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(std::io::stdout().lock());
    w.write_record(["rank", "id", "similarity"])?;
    for (r, h) in hits.iter().enumerate() {
        w.write_record([(r + 1).to_string(), h.id.clone(), format!("{:?}", h.similarity)])?;
    }
    w.flush()?;
    Ok(())
}

fn knn(a: KnnArgs) -> Result<(), CliError> {
    let m = load(&a.input)?;
    let qi = m.row_index(&a.query)?;
    let q = m.row(qi).to_vec();
    let artist = m.meta_value(qi, &a.artist_key).map(str::to_string);
    let hits = cosine_knn(&m, &q, a.k, |i| {
        a.exclude_artist && (i == qi || (artist.is_some() && m.meta_value(i, &a.artist_key) == artist.as_deref()))
    })?;
    write_neighbors(&hits)
}

fn arith(a: ArithArgs) -> Result<(), CliError> {
    let m = load(&a.input)?;
    let v = vector_arith(&m, &a.expr)?;
    let named: Vec<usize> = (0..m.n_rows()).filter(|&i| a.expr.contains(m.ids[i].as_str())).collect();
    let hits = cosine_knn(&m, &v, a.k, |i| a.exclude_operands && named.contains(&i))?;
    write_neighbors(&hits)
}

fn classify_cmd(a: ClassifyArgs) -> Result<(), CliError> {
    let m = load(&a.input)?;
    let labels = analysis::labels(&m, &a.label)?;
    let cols: Vec<usize> = (0..m.n_features()).collect();
    let mut accs = Vec::with_capacity(a.replicates);
    let mut conf: Option<(Vec<String>, Vec<Vec<usize>>)> = None;
    for r in 0..a.replicates.max(1) {
        let split = classify::evaluation_split(&labels, a.train_n, a.test_n, analysis::derive_seed(a.seed, r as u64))?;
        let model = classify::lda_fit_rows(&m, &labels, &split.train, &cols)?;
        accs.push(classify::accuracy(&model, &m, &labels, &split.test));
        let c = classify::confusion(&model, &m, &labels, &split.test);
        match &mut conf {
            None => conf = Some((model.classes.clone(), c)),
            Some((_, acc)) => {
                for (row, add) in acc.iter_mut().zip(c) {
                    for (x, y) in row.iter_mut().zip(add) {
                        *x += y;
                    }
                }
            }
        }
    }
    let n = accs.len() as f64;
    let mean = accs.iter().sum::<f64>() / n;
    let sd = if accs.len() > 1 { (accs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    println!("replicates,train_n,mean_accuracy,sd_accuracy");
    println!("{},{},{mean:?},{sd:?}", accs.len(), a.train_n);
    if let (Some(path), Some((classes, counts))) = (&a.confusion, conf) {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["true\\predicted".to_string()];
        header.extend(classes.iter().cloned());
        w.write_record(&header)?;
        for (c, row) in classes.iter().zip(counts) {
            let mut rec = vec![c.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
    }
    Ok(())
}

fn importance(a: ImportanceArgs) -> Result<(), CliError> {
    let m = load(&a.input)?;
    let imp = feature_importance(&m, &a.label, Some(&a.first), a.max_per_class, a.seed)?;
    let mut w = csv::Writer::from_writer(std::io::stdout().lock());
    w.write_record(["rank", "feature", "separated_pairs", "mean_abs_t"])?;
    for (r, i) in imp.iter().enumerate() {
        w.write_record([(r + 1).to_string(), i.feature.clone(), i.separated_pairs.to_string(), format!("{:?}", i.mean_abs_t)])?;
    }
    w.flush()?;
    Ok(())
}

fn stepwise(a: StepwiseArgs) -> Result<(), CliError> {
    let m = load(&a.input)?;
    let labels = analysis::labels(&m, &a.label)?;
    let imp = feature_importance(&m, &a.label, Some(&a.first), None, a.seed)?;
    let order: Vec<usize> = imp.iter().map(|i| i.column).collect();
    let opts = StepwiseOptions {
        train_sizes: a.train_sizes.clone(),
        test_n: a.test_n,
        feature_counts: if a.feature_counts.is_empty() { None } else { Some(a.feature_counts.clone()) },
        replicates: a.replicates,
        seed: a.seed,
    };
    let rows = stepwise_accuracy(&m, &labels, &order, &opts)?;
    let mut w = csv::Writer::from_writer(std::io::stdout().lock());
    w.write_record(["train_n", "n_features", "last_feature", "mean_accuracy", "sd_accuracy", "replicates"])?;
    for r in rows {
        w.write_record([
            r.train_n.to_string(),
            r.n_features.to_string(),
            imp[r.n_features - 1].feature.clone(),
            format!("{:?}", r.mean_accuracy),
            format!("{:?}", r.sd_accuracy),
            r.replicates.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Scores keyed by id from a CSV file.
pub fn read_scores(path: &Path, id_col: &str, score_col: &str) -> Result<BTreeMap<String, f64>, CliError> {
    let mut rd = csv::Reader::from_path(path)?;
    let header = rd.headers()?.clone();
    let find = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| CliError::Data(format!("{} has no `{name}` column", path.display())))
    };
    let (ic, sc) = (find(id_col)?, find(score_col)?);
    let mut out = BTreeMap::new();
    for rec in rd.records() {
        let rec = rec?;
        let id = rec.get(ic).unwrap_or("").to_string();
        let raw = rec.get(sc).unwrap_or("").trim();
        // blank or non-numeric scores are skipped, not fatal
        if let Ok(v) = raw.parse::<f64>() {
            if v.is_finite() {
                out.insert(id, v);
            }
        }
    }
    Ok(out)
}

fn norms(a: NormsArgs) -> Result<(), CliError> {
    let m = load(&a.input)?;
    let scores = read_scores(&a.scores, &a.id_col, &a.score_col)?;
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for i in 0..m.n_rows() {
        if let Some(&s) = scores.get(&m.ids[i]) {
            rows.push(m.row(i).to_vec());
            y.push(s);
        }
    }
    if rows.is_empty() {
        return Err(CliError::Data("no matrix row has a score".into()));
    }
    let rep = linreg_fit_eval(&rows, &y, a.folds, a.seed)?;
    println!("n,d,r2,adjusted_r2,median_abs_error,folds,reduced_to");
    println!(
        "{},{},{:?},{:?},{:?},{},{}",
        rep.n,
        rep.d,
        rep.r2,
        rep.adjusted_r2,
        rep.median_abs_error,
        rep.folds,
        rep.reduced_to.map(|v| v.to_string()).unwrap_or_default()
    );
    Ok(())
}

fn temporal(a: TemporalArgs) -> Result<(), CliError> {
    let m = load(&a.input)?;
    let opts = TemporalOptions {
        k: a.k,
        year_key: a.year_key.clone(),
        artist_key: a.artist_key.clone(),
        fit_range: a.fit_range.as_deref().map(parse_range).transpose()?,
        ..Default::default()
    };
    let p = temporal_resemblance(&m, &opts)?;
    let mut w = csv::Writer::from_writer(out_writer(a.out.as_deref())?);
    w.write_record(["id", "year", "raw", "adjusted", "neighbors", "short"])?;
    for i in 0..p.ids.len() {
        w.write_record([
            p.ids[i].clone(),
            format!("{}", p.years[i]),
            format!("{:?}", p.raw[i]),
            format!("{:?}", p.adjusted[i]),
            p.neighbors_used[i].to_string(),
            p.short[i].to_string(),
        ])?;
    }
    w.flush()?;
    if let Some(svg) = &a.svg {
        let chart = Chart {
            title: format!("Temporal resemblance (k = {})", a.k),
            x_label: "year".into(),
            y_label: "adjusted median neighbor offset (years)".into(),
            points: p.years.iter().copied().zip(p.adjusted.iter().copied()).collect(),
            lines: Vec::new(),
        };
        fs::write(svg, chart.to_svg())?;
    }
    Ok(())
}

fn trend(a: TrendArgs) -> Result<(), CliError> {
    let m = load(&a.input)?;
    let times = analysis::years(&m, &a.time_key)?;
    let lower = a.value.to_ascii_lowercase();
    let values: Vec<f64> = if let Some(k) = lower.strip_prefix("pc").and_then(|k| k.parse::<usize>().ok()) {
        let z = zscore_matrix(&m, None)?;
        let model = pca_fit(&z, k.max(1))?;
        if model.components.len() < k {
            return Err(CliError::Data(format!("only {} components available", model.components.len())));
        }
        (0..z.n_rows()).map(|i| model.project_row(z.row(i))[k - 1]).collect()
    } else {
        m.column(m.feature_index(&a.value)?)
    };
    let opts = TrendOptions {
        half_window: a.half_window,
        max_half_window: a.max_half_window,
        min_n: a.min_n,
        ..Default::default()
    };
    let rows = rolling_trend(&times, &values, &opts)?;
    let mut w = csv::Writer::from_writer(out_writer(a.out.as_deref())?);
    let mut header = vec!["time".to_string(), "half_window".to_string(), "n".to_string()];
    header.extend(opts.quantiles.iter().map(|q| format!("q{q}")));
    w.write_record(&header)?;
    for r in &rows {
        let mut rec = vec![format!("{}", r.time), r.half_window.to_string(), r.n.to_string()];
        if r.quantiles.is_empty() {
            rec.extend(opts.quantiles.iter().map(|_| String::new()));
        } else {
            rec.extend(r.quantiles.iter().map(|v| format!("{v:?}")));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    if let Some(svg) = &a.svg {
        // wider windows are drawn fainter
        let opacity = |r: &analysis::TrendRow| {
            let span = (opts.max_half_window - opts.half_window).max(1) as f64;
            1.0 - 0.7 * (r.half_window - opts.half_window) as f64 / span
        };
        let styles = [("2.5%", "gray", 0.8), ("25%", "dimgray", 1.5), ("median", "black", 2.5), ("75%", "dimgray", 1.5), ("97.5%", "gray", 0.8)];
        let lines = styles
            .iter()
            .enumerate()
            .filter(|(q, _)| *q < opts.quantiles.len())
            .map(|(q, (label, color, width))| Line {
                label: label.to_string(),
                color: color.to_string(),
                width: *width,
                points: rows.iter().map(|r| r.quantiles.get(q).map(|&v| (r.time, v, opacity(r)))).collect(),
            })
            .collect();
        let chart = Chart {
            title: format!("Rolling trend of {}", a.value),
            x_label: a.time_key.clone(),
            y_label: a.value.clone(),
            points: times.iter().copied().zip(values.iter().copied()).collect(),
            lines,
        };
        fs::write(svg, chart.to_svg())?;
    }
    Ok(())
}

fn synth(a: SynthArgs) -> Result<(), CliError> {
    let (y0, y1) = parse_range(&a.years)?;
    let (w, h) = a
        .size
        .split_once('x')
        .and_then(|(w, h)| Some((w.parse::<usize>().ok()?, h.parse::<usize>().ok()?)))
        .filter(|&(w, h)| w > 0 && h > 0)
        .ok_or_else(|| CliError::Usage(format!("bad --size `{}`", a.size)))?;
    let mut specs = default_specs(a.seed);
    if !a.families.is_empty() {
        let wanted: Vec<Family> =
            a.families.iter().map(|f| f.parse::<Family>()).collect::<Result<_, _>>().map_err(|e| CliError::Usage(e.to_string()))?;
        specs.retain(|s| wanted.contains(&s.family));
    }
    for d in &a.drift {
        let parts: Vec<&str> = d.split(':').collect();
        let [fam, param, slope, year0] = parts[..] else {
            return Err(CliError::Usage(format!("bad --drift `{d}`")));
        };
        let fam: Family = fam.parse().map_err(|e: SynthError| CliError::Usage(e.to_string()))?;
        let slope: f64 = slope.parse().map_err(|_| CliError::Usage(format!("bad slope in `{d}`")))?;
        let year0: f64 = year0.parse().map_err(|_| CliError::Usage(format!("bad year in `{d}`")))?;
        let spec: &mut SynthFamilySpec = specs
            .iter_mut()
            .find(|s| s.family == fam)
            .ok_or_else(|| CliError::Usage(format!("family `{fam}` not selected")))?;
        spec.drift = Some(Drift { param: param.to_string(), slope, year0 });
    }
    let opts = SynthOptions {
        per_family: a.per_family,
        years: (y0 as i64, y1 as i64),
        width: w,
        height: h,
        seed: a.seed,
        ..Default::default()
    };
    let manifest = generate_corpus(&specs, &opts, &a.out)?;
    println!("{} images in {} families; manifest {}", specs.len() * a.per_family, specs.len(), manifest.display());
    Ok(())
}

fn list_transforms(a: ListArgs) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(std::io::stdout().lock());
    w.write_record(["id", "codecs", "scales", "params", "default", "description"])?;
    let fmt_params = |p: &BTreeMap<String, f64>| p.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";");
    let join_codecs = |c: &[crate::codecs::CodecId]| c.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(";");
    let join_scales = |s: &[f64]| s.iter().map(|s| format!("{s}")).collect::<Vec<_>>().join(";");
    match &a.config {
        Some(p) => {
            let cfg = Config::load(p)?;
            for t in &cfg.transforms {
                let def = t.def().map_err(|e| CliError::Data(e.to_string()))?;
                w.write_record([
                    t.id.as_str(),
                    &join_codecs(&t.codecs),
                    &join_scales(&t.scales),
                    &fmt_params(&t.params),
                    "true",
                    def.description,
                ])?;
            }
        }
        None => {
            for d in REGISTRY.iter() {
                let spec = d.default_spec();
                w.write_record([
                    d.id,
                    &join_codecs(d.codecs),
                    &join_scales(d.scales),
                    &fmt_params(&spec.params),
                    if d.default { "true" } else { "false" },
                    d.description,
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
