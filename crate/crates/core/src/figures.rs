//! Data behind the 1D gap figure (fig3), the cut-cross image (fig4) and the
//! cross-filling comparison (fig5), plus file writers for each.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;

use crate::boosting::{fit_gbm, GbmConfig, GbmModel};
use crate::dataset::{write_csv, Dataset};
use crate::error::{Error, Result};
use crate::eval::{distinct_levels_in_gap, gap_jump_metric, masked_mse, Regressor};
use crate::rng::SeededRng;
use crate::synth::{
    make_one_dim_dataset, make_two_dim_cross_dataset, one_dim_function, CrossData, CrossSpec,
    GridSpec,
};
use crate::tree::SplitterKind;

/// Settings for the 1D gap experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig3Config {
    pub n: usize,
    pub noise_sd: f64,
    pub gaps: Vec<(f64, f64)>,
    pub max_depth: usize,
    /// Candidate stage counts and learning rates. The pair with the lowest
    /// grid error of the deterministic model is used for both models.
    pub n_stages: Vec<usize>,
    pub learning_rate: Vec<f64>,
}

impl Default for Fig3Config {
    fn default() -> Self {
        Fig3Config {
            n: 100,
            noise_sd: 0.0,
            gaps: vec![(0.15, 0.25), (0.45, 0.55), (0.75, 0.85)],
            max_depth: 5,
            n_stages: vec![50, 100, 200, 400],
            learning_rate: vec![0.05, 0.1, 0.2, 0.5],
        }
    }
}

impl Fig3Config {
    pub fn with_gaps(gaps: Vec<(f64, f64)>) -> Self {
        Fig3Config {
            gaps,
            ..Fig3Config::default()
        }
    }
}

/// Per-gap smoothness numbers for one model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapStats {
    pub gap: (f64, f64),
    pub max_jump: f64,
    pub levels: usize,
}

#[derive(Debug, Clone)]
pub struct Fig3Output {
    pub train: Dataset,
    pub grid: GridSpec,
    pub n_stages: usize,
    pub learning_rate: f64,
    pub deterministic: GbmModel,
    pub partially_randomized: GbmModel,
    pub deterministic_gaps: Vec<GapStats>,
    pub partially_randomized_gaps: Vec<GapStats>,
}

fn grid_mse_staged(model: &GbmModel, xs: &[f64]) -> Result<Vec<f64>> {
    let mut sums = vec![0.0; model.stages.len() + 1];
    for &x in xs {
        let truth = one_dim_function(x);
        for (s, p) in sums.iter_mut().zip(model.predict_staged(&[x])?) {
            *s += (p - truth) * (p - truth);
        }
    }
    Ok(sums.into_iter().map(|s| s / xs.len() as f64).collect())
}

fn gap_stats(model: &dyn Regressor, grid: &GridSpec, gaps: &[(f64, f64)]) -> Result<Vec<GapStats>> {
    gaps.iter()
        .map(|&gap| {
            Ok(GapStats {
                gap,
                max_jump: gap_jump_metric(model, grid, gap)?,
                levels: distinct_levels_in_gap(model, grid, gap)?,
            })
        })
        .collect()
}

/// Deterministic and partially randomized GBMs on 1D data with gaps.
pub fn fig3(seed: u64, config: &Fig3Config) -> Result<Fig3Output> {
    if config.n_stages.is_empty() || config.learning_rate.is_empty() {
        return Err(Error::InvalidArgument("fig3 needs stage and learning-rate candidates".into()));
    }
    let mut rng = SeededRng::new(seed);
    let train = make_one_dim_dataset(config.n, &mut rng.split(), config.noise_sd, &config.gaps)?;
    let model_seed = rng.next_u64();
    let grid = GridSpec::unit_line();
    let xs = grid.points();
    let max_stages = *config.n_stages.iter().max().unwrap();
    let base = |lr: f64, splitter: SplitterKind, n_stages: usize| GbmConfig {
        n_stages,
        learning_rate: lr,
        max_depth: config.max_depth,
        splitter,
        seed: model_seed,
        ..GbmConfig::default()
    };

    let mut best: Option<(f64, usize, f64, GbmModel)> = None;
    for &lr in &config.learning_rate {
        let model = fit_gbm(&train, &base(lr, SplitterKind::Deterministic, max_stages))?;
        let errs = grid_mse_staged(&model, &xs)?;
        for &m in &config.n_stages {
            if best.as_ref().is_none_or(|b| errs[m] < b.0) {
                best = Some((errs[m], m, lr, model.clone()));
            }
        }
    }
    let (_, n_stages, learning_rate, det_full) = best.expect("candidates are nonempty");
    let deterministic = det_full.truncated(n_stages);
    let partially_randomized = fit_gbm(
        &train,
        &base(learning_rate, SplitterKind::PartiallyRandomized, n_stages),
    )?;
    Ok(Fig3Output {
        deterministic_gaps: gap_stats(&deterministic, &grid, &config.gaps)?,
        partially_randomized_gaps: gap_stats(&partially_randomized, &grid, &config.gaps)?,
        train,
        grid,
        n_stages,
        learning_rate,
        deterministic,
        partially_randomized,
    })
}

/// Settings for the cross-filling experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig5Config {
    pub n_stages: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub arm_width: f64,
    pub points_per_axis: usize,
    /// Candidates per node for the extremely randomized model.
    pub ert_k: usize,
}

impl Default for Fig5Config {
    fn default() -> Self {
        Fig5Config {
            n_stages: 1000,
            max_depth: 9,
            learning_rate: 0.1,
            arm_width: CrossSpec::default().arm_width,
            points_per_axis: 100,
            ert_k: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Fig5Model {
    pub name: &'static str,
    /// Predictions over the full grid, image order.
    pub predictions: Vec<f64>,
    pub cross_mse: f64,
    pub fit_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct Fig5Output {
    pub data: CrossData,
    pub grid: GridSpec,
    pub models: Vec<Fig5Model>,
}

impl Fig5Output {
    pub fn model(&self, name: &str) -> Option<&Fig5Model> {
        self.models.iter().find(|m| m.name == name)
    }
}

/// Fits GBMs with the given splitters on the cut-cross data and scores
/// them inside the cross. All models share one seed.
pub fn fig5_with(seed: u64, config: &Fig5Config, splitters: &[SplitterKind]) -> Result<Fig5Output> {
    let grid = GridSpec::new(0.0, 1.0, config.points_per_axis)?;
    let cross = CrossSpec {
        arm_width: config.arm_width,
    };
    let mut rng = SeededRng::new(seed);
    let data = make_two_dim_cross_dataset(&grid, &cross, &mut rng.split())?;
    let model_seed = rng.next_u64();
    let models = splitters
        .par_iter()
        .map(|&splitter| {
            let gbm = GbmConfig {
                n_stages: config.n_stages,
                learning_rate: config.learning_rate,
                max_depth: config.max_depth,
                splitter,
                seed: model_seed,
                ..GbmConfig::default()
            };
            let start = Instant::now();
            let model = fit_gbm(&data.train, &gbm)?;
            let fit_seconds = start.elapsed().as_secs_f64();
            Ok(Fig5Model {
                name: gbm_name(splitter),
                predictions: model.predict_dataset(&data.full_grid)?,
                cross_mse: masked_mse(&model, &data.full_grid, &data.mask)?,
                fit_seconds,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Fig5Output { data, grid, models })
}

/// [`fig5_with`] for the deterministic, extremely randomized (K =
/// `ert_k`) and partially randomized splitters.
pub fn fig5(seed: u64, config: &Fig5Config) -> Result<Fig5Output> {
    let splitters = [
        SplitterKind::Deterministic,
        SplitterKind::ExtremelyRandomized { k: config.ert_k },
        SplitterKind::PartiallyRandomized,
    ];
    fig5_with(seed, config, &splitters)
}

fn gbm_name(s: SplitterKind) -> &'static str {
    match s {
        SplitterKind::Deterministic => "gbm",
        SplitterKind::ExtremelyRandomized { .. } => "ertgbm",
        SplitterKind::PartiallyRandomized => "prgbm",
    }
}

/// Binary 8-bit PGM of a square image given in image order (`y` outer,
/// ascending). Rows are flipped so larger `y` is at the top. Values are
/// mapped affinely from `range` (default: their own min and max) onto
/// 0..=255, clamping outside it.
pub fn write_pgm<W: Write>(values: &[f64], width: usize, range: Option<(f64, f64)>, mut w: W) -> Result<()> {
    if width == 0 || values.len() % width != 0 || values.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{} values do not form rows of width {width}",
            values.len()
        )));
    }
    let height = values.len() / width;
    let (lo, hi) = range.unwrap_or_else(|| {
        values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    });
    let scale = if hi > lo { 255.0 / (hi - lo) } else { 0.0 };
    let mut bytes = format!("P5\n{width} {height}\n255\n").into_bytes();
    for row in values.chunks(width).rev() {
        bytes.extend(row.iter().map(|&v| ((v - lo) * scale).round().clamp(0.0, 255.0) as u8));
    }
    w.write_all(&bytes).map_err(|e| Error::io("<pgm writer>", e))
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    let path = dir.join(name);
    let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
    Ok((path, BufWriter::new(f)))
}

fn finish(path: &Path, mut w: BufWriter<File>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_rows(dir: &Path, name: &str, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<PathBuf> {
    let (path, file) = create(dir, name)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file);
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let file = w.into_inner().map_err(|e| Error::io(&path, e.into_error()))?;
    finish(&path, file)?;
    Ok(path)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let (path, mut file) = create(dir, name)?;
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
    finish(&path, file)?;
    Ok(path)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes `fig3_train.csv`, `fig3_gbm.csv`, `fig3_prgbm.csv` and the
/// `fig3_meta.json` sidecar.
pub fn write_fig3(out: &Fig3Output, seed: u64, config: &Fig3Config, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut paths = Vec::new();
    let (path, mut file) = create(dir, "fig3_train.csv")?;
    write_csv(&out.train, &mut file)?;
    finish(&path, file)?;
    paths.push(path);
    for (name, model) in [("fig3_gbm.csv", &out.deterministic), ("fig3_prgbm.csv", &out.partially_randomized)] {
        let rows = out.grid.points().into_iter().map(|x| {
            vec![
                format!("{x:?}"),
                format!("{:?}", one_dim_function(x)),
                format!("{:?}", model.predict_row(&[x])),
            ]
        });
        paths.push(write_rows(dir, name, &["x", "truth", "prediction"], rows)?);
    }
    #[derive(Serialize)]
    struct Meta<'a> {
        figure: &'a str,
        seed: u64,
        config: &'a Fig3Config,
        n_stages: usize,
        learning_rate: f64,
        gbm_gaps: &'a [GapStats],
        prgbm_gaps: &'a [GapStats],
    }
    paths.push(write_json(
        dir,
        "fig3_meta.json",
        &Meta {
            figure: "fig3",
            seed,
            config,
            n_stages: out.n_stages,
            learning_rate: out.learning_rate,
            gbm_gaps: &out.deterministic_gaps,
            prgbm_gaps: &out.partially_randomized_gaps,
        },
    )?);
    Ok(paths)
}

/// Writes the original image (`fig4_image.pgm`), the image with the cross
/// blanked to white (`fig4_cut.pgm`), the grid with its mask
/// (`fig4_grid.csv`) and the training points (`fig4_train.csv`).
pub fn write_fig4(data: &CrossData, grid: &GridSpec, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let p = grid.points_per_axis;
    let truth = data.full_grid.targets();
    let range = truth
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let mut paths = Vec::new();
    let (path, file) = create(dir, "fig4_image.pgm")?;
    write_pgm(truth, p, Some(range), file)?;
    paths.push(path);
    let cut: Vec<f64> = truth
        .iter()
        .zip(&data.mask)
        .map(|(&v, &m)| if m { range.1 } else { v })
        .collect();
    let (path, file) = create(dir, "fig4_cut.pgm")?;
    write_pgm(&cut, p, Some(range), file)?;
    paths.push(path);
    let rows = data.full_grid.rows().zip(truth).zip(&data.mask).map(|((r, y), m)| {
        vec![
            format!("{:?}", r[0]),
            format!("{:?}", r[1]),
            format!("{y:?}"),
            u8::from(*m).to_string(),
        ]
    });
    paths.push(write_rows(dir, "fig4_grid.csv", &["x", "y", "f", "in_cross"], rows)?);
    let (path, mut file) = create(dir, "fig4_train.csv")?;
    write_csv(&data.train, &mut file)?;
    finish(&path, file)?;
    paths.push(path);
    Ok(paths)
}

/// Writes one `fig5_<model>.pgm` per model (shared brightness scale: the
/// range of the true image), `fig5_predictions.csv`, `fig5_cross_mse.csv`
/// and the `fig5_meta.json` sidecar, which alone holds timings.
pub fn write_fig5(out: &Fig5Output, seed: u64, config: &Fig5Config, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let p = out.grid.points_per_axis;
    let truth = out.data.full_grid.targets();
    let range = truth
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let mut paths = Vec::new();
    for m in &out.models {
        let (path, file) = create(dir, &format!("fig5_{}.pgm", m.name))?;
        write_pgm(&m.predictions, p, Some(range), file)?;
        paths.push(path);
    }
    let mut header = vec!["x", "y", "f", "in_cross"];
    header.extend(out.models.iter().map(|m| m.name));
    let rows = (0..truth.len()).map(|i| {
        let r = out.data.full_grid.row(i);
        let mut rec = vec![
            format!("{:?}", r[0]),
            format!("{:?}", r[1]),
            format!("{:?}", truth[i]),
            u8::from(out.data.mask[i]).to_string(),
        ];
        rec.extend(out.models.iter().map(|m| format!("{:?}", m.predictions[i])));
        rec
    });
    paths.push(write_rows(dir, "fig5_predictions.csv", &header, rows)?);
    let rows = out
        .models
        .iter()
        .map(|m| vec![m.name.to_string(), format!("{:?}", m.cross_mse)]);
    paths.push(write_rows(dir, "fig5_cross_mse.csv", &["model", "cross_mse"], rows)?);

    #[derive(Serialize)]
    struct ModelMeta<'a> {
        name: &'a str,
        cross_mse: f64,
        fit_seconds: f64,
    }
    #[derive(Serialize)]
    struct Meta<'a> {
        figure: &'a str,
        seed: u64,
        n_stages: usize,
        max_depth: usize,
        learning_rate: f64,
        arm_width: f64,
        points_per_axis: usize,
        ert_k: usize,
        n_train: usize,
        models: Vec<ModelMeta<'a>>,
    }
    let meta = Meta {
        figure: "fig5",
        seed,
        n_stages: config.n_stages,
        max_depth: config.max_depth,
        learning_rate: config.learning_rate,
        arm_width: config.arm_width,
        points_per_axis: config.points_per_axis,
        ert_k: config.ert_k,
        n_train: out.data.train.n_samples(),
        models: out
            .models
            .iter()
            .map(|m| ModelMeta {
                name: m.name,
                cross_mse: m.cross_mse,
                fit_seconds: m.fit_seconds,
            })
            .collect(),
    };
    paths.push(write_json(dir, "fig5_meta.json", &meta)?);
    Ok(paths)
}
