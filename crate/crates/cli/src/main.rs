//! `wcs`: train, apply and evaluate the whitened cosine similarity detector.

mod input;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use wcs_core::classifiers::{
    train_knn, train_pca_pipeline, train_whitened_cosine, Classifier, ComponentSelection, Label,
    Metric, PcaHead,
};
use wcs_core::dataset::{self, PixelScale, PreprocessSpec, SyntheticSpec};
use wcs_core::evaluation::{evaluate, metrics, render_report, MetricsReport, ReportFormat};
use wcs_core::persist::{self, AnyModel, ModelFile};
use wcs_core::selftest::{self, SelftestOptions};
use wcs_core::{Matrix, TruncationPolicy};

use input::{expand_inputs, usage, Item, Source, UsageError};

#[derive(Parser)]
#[command(name = "wcs", version, about = "Whitened cosine similarity detector")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the detector and write a model file.
    Train(TrainArgs),
    /// Classify images or CSV vectors with a trained model.
    Predict(PredictArgs),
    /// Evaluate a model on a labelled test set.
    Eval(EvalArgs),
    /// Train and evaluate KNN / PCA baselines.
    Baseline(BaselineArgs),
    /// Run the numerical self-checks.
    Selftest(SelftestArgs),
    /// Write a synthetic two-class data set as CSV.
    Synth(SynthArgs),
}

#[derive(Args)]
struct ImageArgs {
    /// Target image width in pixels.
    #[arg(long, default_value_t = 512)]
    width: u32,
    /// Target image height in pixels.
    #[arg(long, default_value_t = 512)]
    height: u32,
    #[arg(long, value_enum, default_value_t = ScaleArg::Unit)]
    pixel_scale: ScaleArg,
}

impl ImageArgs {
    fn spec(&self) -> Result<PreprocessSpec> {
        let scale = match self.pixel_scale {
            ScaleArg::Unit => PixelScale::Unit,
            ScaleArg::Raw => PixelScale::Raw,
        };
        PreprocessSpec::new(self.width, self.height, scale).map_err(|e| usage(e.to_string()))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Unit,
    Raw,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
    Csv,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Text => ReportFormat::Text,
            FormatArg::Json => ReportFormat::Json,
            FormatArg::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    normal_dir: Option<PathBuf>,
    #[arg(long)]
    rosacea_dir: Option<PathBuf>,
    /// Labelled vectors (`label,v1,...,vd`) instead of image directories.
    #[arg(long, conflicts_with_all = ["normal_dir", "rosacea_dir"])]
    csv: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    image: ImageArgs,
    /// Relative eigenvalue truncation threshold.
    #[arg(long, default_value_t = 1e-10)]
    rank_tol: f64,
    /// Compare grand-mean-centered vectors at prediction time.
    #[arg(long)]
    center_at_predict: bool,
    /// Hold out part of each class for validation; trains on this fraction.
    #[arg(long)]
    split_ratio: Option<f64>,
    #[arg(long, default_value_t = 0)]
    split_seed: u64,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// Image files, or CSV files whose rows are scored individually.
    #[arg(required = true)]
    paths: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
    /// Force grand-mean centering regardless of the stored setting.
    #[arg(long)]
    center_at_predict: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    normal_dir: Option<PathBuf>,
    #[arg(long)]
    rosacea_dir: Option<PathBuf>,
    #[arg(long, conflicts_with_all = ["normal_dir", "rosacea_dir"])]
    csv: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
    /// Row label in the report.
    #[arg(long, default_value = "Whitened cosine similarity")]
    name: String,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    KnnL1,
    KnnL2,
    KnnCos,
    PcaKnn,
    PcaMean,
    /// The whitened cosine detector itself, for side-by-side tables.
    Wcs,
}

impl Method {
    const ALL: [Method; 6] = [
        Method::PcaMean,
        Method::KnnL1,
        Method::KnnL2,
        Method::KnnCos,
        Method::PcaKnn,
        Method::Wcs,
    ];

    fn row_name(self) -> &'static str {
        match self {
            Method::KnnL1 => "KNN with L1 metric",
            Method::KnnL2 => "KNN with L2 metric",
            Method::KnnCos => "KNN with cosine metric",
            Method::PcaKnn => "KNN-L2 after PCA",
            Method::PcaMean => "Class independent PCA",
            Method::Wcs => "Whitened cosine similarity",
        }
    }
}

#[derive(Args)]
struct BaselineArgs {
    /// Methods to run (comma separated); all of them when omitted.
    #[arg(long, value_enum, value_delimiter = ',')]
    method: Vec<Method>,
    /// Neighbour count for KNN methods.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    /// PCA component count; defaults to 95% of retained variance.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    components: Option<u64>,
    #[arg(long)]
    train_normal: Option<PathBuf>,
    #[arg(long)]
    train_rosacea: Option<PathBuf>,
    #[arg(long, conflicts_with_all = ["train_normal", "train_rosacea"])]
    train_csv: Option<PathBuf>,
    #[arg(long)]
    test_normal: Option<PathBuf>,
    #[arg(long)]
    test_rosacea: Option<PathBuf>,
    #[arg(long, conflicts_with_all = ["test_normal", "test_rosacea"])]
    test_csv: Option<PathBuf>,
    #[command(flatten)]
    image: ImageArgs,
    #[arg(long, default_value_t = 1e-10)]
    rank_tol: f64,
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
    /// Save the trained model (single method only).
    #[arg(long)]
    save: Option<PathBuf>,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, hide = true)]
    inject_fault: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 64)]
    d: usize,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    m: usize,
    #[arg(long, default_value_t = 10.0)]
    separation: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write a held-out set drawn from the same clouds.
    #[arg(long, requires = "holdout_out")]
    holdout: Option<usize>,
    #[arg(long)]
    holdout_out: Option<PathBuf>,
}

fn policy(rank_tol: f64) -> Result<TruncationPolicy> {
    if !(0.0..1.0).contains(&rank_tol) {
        return Err(usage(format!("--rank-tol must be in [0, 1), got {rank_tol}")));
    }
    Ok(TruncationPolicy::with_relative(rank_tol))
}

fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<ExitCode> {
    let spec = args.image.spec()?;
    let policy = policy(args.rank_tol)?;
    let source = Source {
        normal_dir: args.normal_dir.as_deref(),
        rosacea_dir: args.rosacea_dir.as_deref(),
        csv: args.csv.as_deref(),
        role: "training",
    };
    let data = source.load(Some(&spec))?;
    let (train_n, train_r, val) = match args.split_ratio {
        None => (data.x_normal, data.x_rosacea, None),
        Some(ratio) => {
            let (tn, vn) = split_columns(&data.x_normal, ratio, args.split_seed)?;
            let (tr, vr) = split_columns(&data.x_rosacea, ratio, args.split_seed.wrapping_add(1))?;
            (tn, tr, Some((vn, vr)))
        }
    };
    let model = train_whitened_cosine(&train_n, &train_r, &policy)?
        .with_preprocess(data.from_images.then_some(spec))
        .with_center_at_predict(args.center_at_predict);

    let (n, m) = model.train_counts();
    println!("d = {}", model.dim());
    println!("n = {n} (normal), m = {m} (rosacea)");
    println!("retained rank = {}", model.retained_rank());
    let top: Vec<String> = model
        .whitening()
        .eigenvalues()
        .iter()
        .take(5)
        .map(|v| format!("{v:.6e}"))
        .collect();
    println!("top eigenvalues = [{}]", top.join(", "));

    if let Some((vn, vr)) = val {
        let cm = evaluate(&model, &vn, &vr)?;
        let report = metrics(&cm, "validation")?;
        emit(&render_report(&[report], ReportFormat::Text)?)?;
    }
    persist::save_path(&ModelFile::from(model), &args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!("model written to {}", args.out.display());
    Ok(ExitCode::SUCCESS)
}

/// Seeded split of the columns of one class.
fn split_columns(x: &Matrix, ratio: f64, seed: u64) -> Result<(Matrix, Matrix)> {
    let entries = (0..x.cols())
        .map(|j| dataset::ManifestEntry {
            path: j.to_string().into(),
            label: Label::Normal,
        })
        .collect();
    let manifest = dataset::DatasetManifest::new(entries)?;
    let (train, val) = dataset::split(&manifest, ratio, seed).map_err(|e| usage(e.to_string()))?;
    let pick = |m: &dataset::DatasetManifest| -> Result<Matrix> {
        let cols: Vec<&[f64]> = m
            .entries
            .iter()
            .map(|e| x.column(e.path.to_string_lossy().parse::<usize>().expect("index path")))
            .collect();
        Ok(Matrix::from_columns(&cols)?)
    };
    Ok((pick(&train)?, pick(&val)?))
}

fn load_model(path: &std::path::Path) -> Result<ModelFile> {
    if !path.is_file() {
        return Err(usage(format!("model file not found: {}", path.display())));
    }
    persist::load_path(path).with_context(|| format!("loading {}", path.display()))
}

#[derive(serde::Serialize)]
struct PredictRow {
    input: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<Label>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sim_normal: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sim_rosacea: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn cmd_predict(args: PredictArgs) -> Result<ExitCode> {
    let mut file = load_model(&args.model)?;
    if args.center_at_predict {
        if let AnyModel::WhitenedCosine(m) = file.model {
            file.model = AnyModel::WhitenedCosine(m.with_center_at_predict(true));
        } else {
            return Err(usage("--center-at-predict applies to whitened-cosine models only"));
        }
    }
    let model = &file.model;
    let spec = file.preprocess;
    let items = expand_inputs(&args.paths);
    let rows: Vec<PredictRow> = items
        .par_iter()
        .map(|item| {
            let (name, result) = match item {
                Item::Image(p) => {
                    let name = p.display().to_string();
                    let r = match &spec {
                        Some(s) => dataset::load_image_vector(p, s)
                            .and_then(|v| model.predict(&v))
                            .map_err(|e| e.to_string()),
                        None => Err("model was trained on raw vectors; pass CSV input".to_string()),
                    };
                    (name, r)
                }
                Item::Vector(name, v) => (name.clone(), model.predict(v).map_err(|e| e.to_string())),
                Item::Failed(name, e) => (name.clone(), Err(e.clone())),
            };
            match result {
                Ok(p) => PredictRow {
                    input: name,
                    label: Some(p.label),
                    sim_normal: Some(p.sim_normal),
                    sim_rosacea: Some(p.sim_rosacea),
                    error: None,
                },
                Err(e) => PredictRow {
                    input: name,
                    label: None,
                    sim_normal: None,
                    sim_rosacea: None,
                    error: Some(e),
                },
            }
        })
        .collect();

    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    match args.format {
        FormatArg::Json => emit(&(serde_json::to_string_pretty(&rows)? + "\n"))?,
        FormatArg::Text | FormatArg::Csv => {
            let csv = matches!(args.format, FormatArg::Csv);
            let mut out = String::new();
            if csv {
                out.push_str("input,label,sim_normal,sim_rosacea,error\n");
            }
            for r in &rows {
                let line = match (&r.error, r.label, r.sim_normal, r.sim_rosacea) {
                    (None, Some(l), Some(sn), Some(sr)) if csv => {
                        format!("{},{l},{sn:.4},{sr:.4},\n", r.input)
                    }
                    (None, Some(l), Some(sn), Some(sr)) => format!(
                        "{}\t{l}\tsim_normal={sn:.4}\tsim_rosacea={sr:.4}\n",
                        r.input
                    ),
                    (Some(e), ..) if csv => format!("{},,,,\"{}\"\n", r.input, e.replace('"', "'")),
                    (Some(e), ..) => format!("{}\terror: {e}\n", r.input),
                    _ => unreachable!("row has either a prediction or an error"),
                };
                out.push_str(&line);
            }
            emit(&out)?;
        }
    }
    if failed > 0 {
        eprintln!("{failed} input(s) failed");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_eval(args: EvalArgs) -> Result<ExitCode> {
    let file = load_model(&args.model)?;
    let source = Source {
        normal_dir: args.normal_dir.as_deref(),
        rosacea_dir: args.rosacea_dir.as_deref(),
        csv: args.csv.as_deref(),
        role: "test",
    };
    let data = source.load(file.preprocess.as_ref())?;
    if !data.from_images && file.preprocess.is_some() {
        log::warn!("model expects images; evaluating raw CSV vectors");
    }
    let cm = evaluate(&file.model, &data.x_normal, &data.x_rosacea)?;
    let report = metrics(&cm, args.name)?;
    emit(&render_report(&[report], args.format.into())?)?;
    Ok(ExitCode::SUCCESS)
}

fn train_method(
    method: Method,
    args: &BaselineArgs,
    xn: &Matrix,
    xr: &Matrix,
    policy: &TruncationPolicy,
) -> Result<AnyModel> {
    let k = args.k as usize;
    let components = args
        .components
        .map_or(ComponentSelection::default(), |c| ComponentSelection::Fixed(c as usize));
    let knn = |metric| -> Result<AnyModel> {
        let x = xn.hstack(xr)?;
        let mut labels = vec![Label::Normal; xn.cols()];
        labels.resize(x.cols(), Label::Rosacea);
        Ok(AnyModel::Knn(train_knn(&x, &labels, k, metric).map_err(|e| usage(e.to_string()))?))
    };
    let pca = |head| -> Result<AnyModel> {
        Ok(AnyModel::PcaPipeline(
            train_pca_pipeline(xn, xr, components, head, policy).map_err(|e| match e {
                wcs_core::Error::InvalidParameter(m) => usage(m),
                other => other.into(),
            })?,
        ))
    };
    match method {
        Method::KnnL1 => knn(Metric::L1),
        Method::KnnL2 => knn(Metric::L2),
        Method::KnnCos => knn(Metric::Cosine),
        Method::PcaKnn => pca(PcaHead::KnnL2 { k }),
        Method::PcaMean => pca(PcaHead::NearestMean),
        Method::Wcs => Ok(AnyModel::WhitenedCosine(train_whitened_cosine(xn, xr, policy)?)),
    }
}

fn cmd_baseline(args: BaselineArgs) -> Result<ExitCode> {
    let methods: Vec<Method> = if args.method.is_empty() {
        Method::ALL.to_vec()
    } else {
        args.method.clone()
    };
    if args.save.is_some() && methods.len() != 1 {
        return Err(usage("--save needs exactly one --method"));
    }
    let policy = policy(args.rank_tol)?;
    let spec = args.image.spec()?;
    let train = Source {
        normal_dir: args.train_normal.as_deref(),
        rosacea_dir: args.train_rosacea.as_deref(),
        csv: args.train_csv.as_deref(),
        role: "training",
    }
    .load(Some(&spec))?;
    let test = Source {
        normal_dir: args.test_normal.as_deref(),
        rosacea_dir: args.test_rosacea.as_deref(),
        csv: args.test_csv.as_deref(),
        role: "test",
    }
    .load(Some(&spec))?;

    let mut reports: Vec<MetricsReport> = Vec::new();
    for method in methods {
        let model = train_method(method, &args, &train.x_normal, &train.x_rosacea, &policy)?;
        let cm = evaluate(&model, &test.x_normal, &test.x_rosacea)?;
        reports.push(metrics(&cm, method.row_name())?);
        if let Some(path) = &args.save {
            let preprocess = train.from_images.then_some(spec);
            let model = match model {
                AnyModel::WhitenedCosine(m) => AnyModel::WhitenedCosine(m.with_preprocess(preprocess)),
                other => other,
            };
            persist::save_path(&ModelFile { preprocess, model }, path)?;
        }
    }
    emit(&render_report(&reports, args.format.into())?)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_selftest(args: SelftestArgs) -> Result<ExitCode> {
    let start = std::time::Instant::now();
    let results = selftest::run(&SelftestOptions {
        seed: args.seed,
        perturb_eigenvalues: args.inject_fault,
    })?;
    for r in &results {
        println!("{r}");
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!(
        "{} of {} checks passed (seed {}, {:.1?})",
        results.len() - failed,
        results.len(),
        args.seed,
        start.elapsed()
    );
    Ok(if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_synth(args: SynthArgs) -> Result<ExitCode> {
    let spec = SyntheticSpec {
        d: args.d,
        n: args.n,
        m: args.m,
        separation: args.separation,
        sigma: args.sigma,
        seed: args.seed,
    };
    let holdout = args.holdout.unwrap_or(0);
    let (train, test) = dataset::generate_synthetic_with_holdout(&spec, holdout, holdout)
        .map_err(|e| usage(e.to_string()))?;
    let write = |data: &dataset::SyntheticData, path: &PathBuf| -> Result<()> {
        let x = data.x_normal.hstack(&data.x_rosacea)?;
        let f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        dataset::write_csv_vectors(std::io::BufWriter::new(f), &x, &data.labels())?;
        Ok(())
    };
    write(&train, &args.out)?;
    println!("wrote {} samples to {}", args.n + args.m, args.out.display());
    if let Some(path) = &args.holdout_out {
        write(&test, path)?;
        println!("wrote {} held-out samples to {}", 2 * holdout, path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn configure_threads() {
    if let Ok(v) = std::env::var("WCS_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("could not size thread pool: {e}");
                }
            }
            _ => log::warn!("ignoring invalid WCS_THREADS={v:?}"),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    configure_threads();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Baseline(a) => cmd_baseline(a),
        Command::Selftest(a) => cmd_selftest(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
