//! Command-line front end. [`run`] parses arguments, does the work and
//! returns the process exit code; errors are reported as one line on
//! stderr of the form `error[<kind>]: <message>`.

use std::fs::{self, File};
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::boosting::{fit_gbm, EarlyStopping, GbmConfig};
use crate::dataset::{load_csv, read_features_csv, write_csv, TargetColumn};
use crate::error::{Error, Result};
use crate::eval::{
    run_benchmark, write_repeats_csv, write_summary_csv, write_times_csv, BenchmarkPlan,
    DatasetSource, HyperGrid, ModelSpec, SelectionMode,
};
use crate::figures::{fig3, fig5, write_fig3, write_fig4, write_fig5, Fig3Config, Fig5Config};
use crate::forest::{fit_forest, ForestConfig};
use crate::model_io::{load_model, write_model, Model};
use crate::rng::SeededRng;
use crate::synth::{
    make_friedman, make_linear_regression, make_one_dim_dataset, make_sparse_uncorrelated,
    make_two_dim_cross_dataset, CrossSpec, Friedman, GridSpec,
};
use crate::tree::SplitterKind;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;
pub const EXIT_IO: i32 = 5;

const EXIT_CODES_HELP: &str = "\
Exit codes:
  0  success
  2  usage error (bad flags, unknown names, invalid parameters)
  3  data error (unreadable or invalid CSV, model file or dimensions)
  4  numeric error (non-finite values during fitting)
  5  I/O error (files or directories that cannot be read or written)";

#[derive(Debug, Parser)]
#[command(
    name = "prgbm",
    version,
    about = "Gradient boosting with deterministic, extremely randomized and partially randomized trees",
    after_help = EXIT_CODES_HELP
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset as CSV.
    Generate(GenerateArgs),
    /// Fit a model on a CSV dataset and save it as JSON.
    Train(TrainArgs),
    /// Predict with a saved model; writes one `prediction` column.
    Predict(PredictArgs),
    /// Repeated random-split benchmark; writes summary.csv, repeats.csv, times.csv.
    Benchmark(BenchmarkArgs),
    /// Data and images for the figures.
    Figures(FiguresArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// friedman1, friedman2, friedman3, sparse, regression, one-dim or cross
    pub generator: String,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Number of features (regression only).
    #[arg(long, default_value_t = 100)]
    pub m: usize,
    /// Noise standard deviation [default: 1 for friedman1 and sparse, else 0]
    #[arg(long)]
    pub noise: Option<f64>,
    /// Empty intervals for one-dim, e.g. `0.45:0.55,0.75:0.85`.
    #[arg(long, default_value = "0.45:0.55")]
    pub gaps: String,
    /// Cross arm width as a fraction of the side (cross only).
    #[arg(long, default_value_t = 0.2)]
    pub arm_width: f64,
    /// Grid points per axis (cross only).
    #[arg(long, default_value_t = 100)]
    pub points: usize,
    /// Write the full grid instead of the training points (cross only).
    #[arg(long)]
    pub full_grid: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output path, `-` for stdout.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training CSV (with header).
    #[arg(long)]
    pub data: PathBuf,
    /// Target column name or zero-based index.
    #[arg(long, default_value = "y")]
    pub target: String,
    /// gbm, prgbm, ertgbm, rf or ert
    #[arg(long, default_value = "prgbm")]
    pub model: String,
    /// Key-value config file overriding model defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Model JSON path, `-` for stdout.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Input CSV; every column except `--target` is a feature.
    #[arg(long)]
    pub data: PathBuf,
    /// Column to ignore, if the file has one.
    #[arg(long)]
    pub target: Option<String>,
    /// Output path, `-` for stdout.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Comma list of friedman1, friedman2, friedman3, sparse, regression, csv:<path>
    #[arg(long, default_value = "friedman1")]
    pub datasets: String,
    /// Comma list of gbm, prgbm, ertgbm, rf, ert, mean
    #[arg(long, default_value = "gbm,prgbm,rf,ert")]
    pub models: String,
    /// Preset name (standard, quick) or path to a grid file.
    #[arg(long, default_value = "standard")]
    pub grid: String,
    #[arg(long, default_value_t = 100)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads [default: all cores]. Results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// paper: pick the grid point with the best mean test MSE over repeats;
    /// nested: pick per repeat on an inner split of the training part.
    #[arg(long, default_value = "paper")]
    pub selection: String,
    /// Sample size for synthetic datasets.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Target column for csv: datasets.
    #[arg(long, default_value = "y")]
    pub target: String,
    /// Output directory.
    #[arg(long, default_value = "bench-out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FiguresArgs {
    /// fig3, fig4 or fig5
    pub which: String,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, default_value = "figures-out")]
    pub out: PathBuf,
    /// Empty intervals for fig3.
    #[arg(long, default_value = "0.15:0.25,0.45:0.55,0.75:0.85")]
    pub gaps: String,
    /// Training points for fig3.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Noise standard deviation for fig3.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Cross arm width for fig4 and fig5.
    #[arg(long, default_value_t = 0.2)]
    pub arm_width: f64,
    /// Stages for fig5.
    #[arg(long, default_value_t = 1000)]
    pub stages: usize,
    /// Tree depth for fig5.
    #[arg(long, default_value_t = 9)]
    pub depth: usize,
    /// Learning rate for fig5.
    #[arg(long, default_value_t = 0.1)]
    pub learning_rate: f64,
}

/// Maps an error to its exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) => EXIT_USAGE,
        Error::Io { .. } => EXIT_IO,
        Error::Numeric(_) => EXIT_NUMERIC,
        Error::Csv(c) if c.is_io_error() => EXIT_IO,
        Error::Csv(_)
        | Error::Cell { .. }
        | Error::InvalidData(_)
        | Error::DimensionMismatch { .. }
        | Error::Format(_) => EXIT_DATA,
    }
}

fn error_kind(code: i32) -> &'static str {
    match code {
        EXIT_USAGE => "usage",
        EXIT_DATA => "data",
        EXIT_NUMERIC => "numeric",
        EXIT_IO => "io",
        _ => "internal",
    }
}

/// One line, no embedded newlines.
pub fn error_line(kind: &str, message: &str) -> String {
    let flat: Vec<&str> = message.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    format!("error[{kind}]: {}", flat.join(" "))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            return if e.use_stderr() {
                let rendered = e.render().to_string();
                let first = rendered.lines().next().unwrap_or("invalid arguments");
                let first = first.strip_prefix("error: ").unwrap_or(first);
                eprintln!("{}", error_line("usage", first));
                EXIT_USAGE
            } else {
                let _ = e.print();
                EXIT_OK
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("{}", error_line(error_kind(code), &e.to_string()));
            code
        }
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Generate(a) => generate(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Benchmark(a) => benchmark(a),
        Command::Figures(a) => figures(a),
    }
}

fn is_stdout(p: &Path) -> bool {
    p.as_os_str() == "-"
}

/// Fails early if a file cannot be created at `p` later.
fn check_output_file(p: &Path) -> Result<()> {
    if is_stdout(p) {
        return Ok(());
    }
    let parent = match p.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    if !parent.is_dir() {
        return Err(Error::io(
            p,
            io::Error::new(io::ErrorKind::NotFound, "parent directory does not exist"),
        ));
    }
    if p.is_dir() {
        return Err(Error::io(
            p,
            io::Error::new(io::ErrorKind::IsADirectory, "output path is a directory"),
        ));
    }
    Ok(())
}

fn check_input_file(p: &Path) -> Result<()> {
    if !p.is_file() {
        return Err(Error::io(
            p,
            io::Error::new(io::ErrorKind::NotFound, "no such file"),
        ));
    }
    Ok(())
}

fn prepare_dir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).map_err(|e| Error::io(p, e))
}

/// Runs `f` on stdout or on a buffered file at `p`.
fn with_output(p: &Path, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    if is_stdout(p) {
        let stdout = io::stdout();
        let mut lock = stdout.lock();
        f(&mut lock)?;
        lock.flush().map_err(|e| Error::io("<stdout>", e))
    } else {
        let file = File::create(p).map_err(|e| Error::io(p, e))?;
        let mut w = BufWriter::new(file);
        f(&mut w)?;
        w.flush().map_err(|e| Error::io(p, e))
    }
}

/// `lo:hi` pairs separated by commas; an empty string means no gaps.
pub fn parse_gaps(s: &str) -> Result<Vec<(f64, f64)>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let (lo, hi) = p
                .split_once(':')
                .ok_or_else(|| Error::InvalidArgument(format!("gap {p:?} is not of the form lo:hi")))?;
            let parse = |v: &str| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidArgument(format!("bad number {v:?} in gap {p:?}")))
            };
            Ok((parse(lo)?, parse(hi)?))
        })
        .collect()
}

fn comma_list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|p| !p.is_empty()).map(String::from).collect()
}

fn generate(a: GenerateArgs) -> Result<()> {
    check_output_file(&a.out)?;
    let mut rng = SeededRng::new(a.seed);
    let noise = |default: f64| a.noise.unwrap_or(default);
    let d = match a.generator.as_str() {
        "friedman1" => make_friedman(Friedman::One, a.n, &mut rng, noise(1.0))?,
        "friedman2" => make_friedman(Friedman::Two, a.n, &mut rng, noise(0.0))?,
        "friedman3" => make_friedman(Friedman::Three, a.n, &mut rng, noise(0.0))?,
        "sparse" => make_sparse_uncorrelated(a.n, &mut rng, noise(1.0))?,
        "regression" => make_linear_regression(a.n, a.m, &mut rng, noise(0.0))?,
        "one-dim" => make_one_dim_dataset(a.n, &mut rng, noise(0.0), &parse_gaps(&a.gaps)?)?,
        "cross" => {
            let grid = GridSpec::new(0.0, 1.0, a.points)?;
            let cross = CrossSpec {
                arm_width: a.arm_width,
            };
            let data = make_two_dim_cross_dataset(&grid, &cross, &mut rng)?;
            if a.full_grid {
                data.full_grid
            } else {
                data.train
            }
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown generator {other:?} (expected friedman1, friedman2, friedman3, sparse, regression, one-dim, cross)"
            )))
        }
    };
    with_output(&a.out, |w| write_csv(&d, w))
}

/// Keys accepted in a `train --config` file. Boosting keys apply to gbm,
/// prgbm and ertgbm; forest keys to rf and ert.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub n_stages: Option<usize>,
    pub learning_rate: Option<f64>,
    pub max_depth: Option<usize>,
    pub min_samples_split: Option<usize>,
    pub k: Option<usize>,
    pub validation_fraction: Option<f64>,
    pub patience: Option<usize>,
    pub n_trees: Option<usize>,
    pub max_features: Option<usize>,
    pub bootstrap: Option<bool>,
}

impl TrainConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("config file: {e}")))
    }

    fn reject(&self, keys: &[(&str, bool)], model: &str) -> Result<()> {
        match keys.iter().find(|(_, set)| *set) {
            Some((k, _)) => Err(Error::InvalidArgument(format!("config key {k} does not apply to {model}"))),
            None => Ok(()),
        }
    }
}

/// Fits `spec` on `d` with defaults overridden by `cfg`.
pub fn train_model(d: &crate::Dataset, spec: ModelSpec, cfg: &TrainConfig, seed: u64) -> Result<Model> {
    match spec {
        ModelSpec::Gbm(splitter) => {
            cfg.reject(
                &[
                    ("n_trees", cfg.n_trees.is_some()),
                    ("max_features", cfg.max_features.is_some()),
                    ("bootstrap", cfg.bootstrap.is_some()),
                ],
                &spec.name(),
            )?;
            let splitter = match splitter {
                SplitterKind::ExtremelyRandomized { k } => SplitterKind::ExtremelyRandomized {
                    k: cfg.k.unwrap_or(k),
                },
                s => {
                    cfg.reject(&[("k", cfg.k.is_some())], &spec.name())?;
                    s
                }
            };
            let d0 = GbmConfig::default();
            let early_stopping = match (cfg.validation_fraction, cfg.patience) {
                (None, None) => None,
                (f, p) => Some(EarlyStopping {
                    validation_fraction: f.unwrap_or(0.2),
                    patience: p.unwrap_or(20),
                }),
            };
            let config = GbmConfig {
                n_stages: cfg.n_stages.unwrap_or(d0.n_stages),
                learning_rate: cfg.learning_rate.unwrap_or(d0.learning_rate),
                max_depth: cfg.max_depth.unwrap_or(d0.max_depth),
                min_samples_split: cfg.min_samples_split.unwrap_or(d0.min_samples_split),
                splitter,
                seed,
                early_stopping,
            };
            Ok(Model::Gbm(fit_gbm(d, &config)?))
        }
        ModelSpec::RandomForest | ModelSpec::ExtraTrees => {
            cfg.reject(
                &[
                    ("n_stages", cfg.n_stages.is_some()),
                    ("learning_rate", cfg.learning_rate.is_some()),
                    ("validation_fraction", cfg.validation_fraction.is_some()),
                    ("patience", cfg.patience.is_some()),
                ],
                &spec.name(),
            )?;
            let base = if spec == ModelSpec::RandomForest {
                cfg.reject(&[("k", cfg.k.is_some())], "rf")?;
                ForestConfig::random_forest(d.n_features())
            } else {
                ForestConfig {
                    splitter: SplitterKind::ExtremelyRandomized { k: cfg.k.unwrap_or(1) },
                    ..ForestConfig::extra_trees()
                }
            };
            let config = ForestConfig {
                n_trees: cfg.n_trees.unwrap_or(base.n_trees),
                max_depth: cfg.max_depth.unwrap_or(base.max_depth),
                min_samples_split: cfg.min_samples_split.unwrap_or(base.min_samples_split),
                max_features: cfg.max_features.or(base.max_features),
                bootstrap: cfg.bootstrap.unwrap_or(base.bootstrap),
                seed,
                ..base
            };
            Ok(Model::Forest(fit_forest(d, &config)?))
        }
        ModelSpec::Mean => Err(Error::InvalidArgument(
            "the mean baseline is benchmark-only and cannot be saved".into(),
        )),
    }
}

fn read_text(p: &Path) -> Result<String> {
    let mut s = String::new();
    File::open(p)
        .and_then(|mut f| f.read_to_string(&mut s))
        .map_err(|e| Error::io(p, e))?;
    Ok(s)
}

fn train(a: TrainArgs) -> Result<()> {
    check_input_file(&a.data)?;
    if let Some(c) = &a.config {
        check_input_file(c)?;
    }
    check_output_file(&a.out)?;
    let spec = ModelSpec::from_str(&a.model)?;
    let cfg = match &a.config {
        Some(p) => TrainConfig::from_toml(&read_text(p)?)?,
        None => TrainConfig::default(),
    };
    let target = TargetColumn::from(a.target.as_str());
    let d = load_csv(&a.data, target)?;
    let model = train_model(&d, spec, &cfg, a.seed)?;
    with_output(&a.out, |w| write_model(&model, w))
}

fn predict(a: PredictArgs) -> Result<()> {
    check_input_file(&a.model)?;
    check_input_file(&a.data)?;
    check_output_file(&a.out)?;
    let model = load_model(&a.model)?;
    let drop = a.target.as_deref().map(TargetColumn::from);
    let file = File::open(&a.data).map_err(|e| Error::io(&a.data, e))?;
    let (_, rows) = read_features_csv(file, drop)?;
    let preds = rows
        .iter()
        .map(|r| model.predict(r))
        .collect::<Result<Vec<f64>>>()?;
    with_output(&a.out, |w| {
        let mut out = String::from("prediction\n");
        for p in preds {
            out.push_str(&format!("{p:?}\n"));
        }
        w.write_all(out.as_bytes()).map_err(|e| Error::io("<output>", e))
    })
}

fn load_grid(s: &str) -> Result<HyperGrid> {
    match HyperGrid::preset(s) {
        Ok(g) => Ok(g),
        Err(_) if Path::new(s).is_file() => HyperGrid::from_toml(&read_text(Path::new(s))?),
        Err(_) => Err(Error::InvalidArgument(format!(
            "--grid {s:?} is neither a preset (standard, quick) nor a readable file"
        ))),
    }
}

fn parse_source(s: &str, n: usize, target: &str) -> Result<DatasetSource> {
    match s.strip_prefix("csv:") {
        Some(path) => {
            check_input_file(Path::new(path))?;
            Ok(DatasetSource::Csv {
                path: PathBuf::from(path),
                target: TargetColumn::from(target),
            })
        }
        None => DatasetSource::synthetic(s, n),
    }
}

fn benchmark(a: BenchmarkArgs) -> Result<()> {
    let datasets = comma_list(&a.datasets)
        .iter()
        .map(|s| parse_source(s, a.n, &a.target))
        .collect::<Result<Vec<_>>>()?;
    let models = comma_list(&a.models)
        .iter()
        .map(|s| ModelSpec::from_str(s))
        .collect::<Result<Vec<_>>>()?;
    if datasets.is_empty() || models.is_empty() {
        return Err(Error::InvalidArgument("need at least one dataset and one model".into()));
    }
    if a.threads == Some(0) {
        return Err(Error::InvalidArgument("--threads must be positive".into()));
    }
    let plan = BenchmarkPlan {
        datasets,
        models,
        grid: load_grid(&a.grid)?,
        repeats: a.repeats,
        seed: a.seed,
        selection: SelectionMode::from_str(&a.selection)?,
    };
    plan.validate()?;
    prepare_dir(&a.out)?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = a.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start thread pool: {e}")))?;
    let rows = pool.install(|| {
        run_benchmark(&plan, |dataset, report| {
            eprintln!(
                "{dataset} {}: mean mse {:.6} ({})",
                report.model_name, report.mean_mse, report.chosen_hyperparams[0]
            );
        })
    })?;
    let names: Vec<String> = plan.models.iter().map(|m| m.name()).collect();
    with_output(&a.out.join("summary.csv"), |w| write_summary_csv(&rows, &names, w))?;
    with_output(&a.out.join("repeats.csv"), |w| write_repeats_csv(&rows, w))?;
    with_output(&a.out.join("times.csv"), |w| write_times_csv(&rows, &names, w))?;
    Ok(())
}

fn figures(a: FiguresArgs) -> Result<()> {
    let paths = match a.which.as_str() {
        "fig3" => {
            let config = Fig3Config {
                n: a.n,
                noise_sd: a.noise,
                ..Fig3Config::with_gaps(parse_gaps(&a.gaps)?)
            };
            prepare_dir(&a.out)?;
            let out = fig3(a.seed, &config)?;
            write_fig3(&out, a.seed, &config, &a.out)?
        }
        "fig4" => {
            let grid = GridSpec::unit_image();
            let cross = CrossSpec {
                arm_width: a.arm_width,
            };
            prepare_dir(&a.out)?;
            let data = make_two_dim_cross_dataset(&grid, &cross, &mut SeededRng::new(a.seed).split())?;
            write_fig4(&data, &grid, &a.out)?
        }
        "fig5" => {
            let config = Fig5Config {
                n_stages: a.stages,
                max_depth: a.depth,
                learning_rate: a.learning_rate,
                arm_width: a.arm_width,
                ..Fig5Config::default()
            };
            prepare_dir(&a.out)?;
            let out = fig5(a.seed, &config)?;
            for m in &out.models {
                eprintln!("{}: cross mse {:.6}", m.name, m.cross_mse);
            }
            write_fig5(&out, a.seed, &config, &a.out)?
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown figure {other:?} (expected fig3, fig4, fig5)"
            )))
        }
    };
    for p in paths {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}
