//! Repeated random-split evaluation.
//!
//! Each repeat draws a fresh `floor(3n/4)` / rest partition, fits every grid
//! point, and scores test MSE. Stage and tree counts are evaluated from
//! prefixes of a single fit with the largest count, so the grid only
//! multiplies work along the learning-rate, depth and `K` axes.
//!
//! Two selection modes:
//! * [`SelectionMode::Paper`] picks the grid point with the lowest test MSE
//!   averaged over all repeats (the same hyperparameters for every repeat).
//!   This peeks at the test folds.
//! * [`SelectionMode::Nested`] splits each training fold again (3/4 inner
//!   train, 1/4 validation), selects on validation, refits on the whole
//!   training fold and scores once on test.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boosting::{fit_gbm_traced, GbmConfig, GbmModel, SquaredError};
use crate::dataset::{load_csv, split_train_test, Dataset, TargetColumn};
use crate::error::{Error, Result};
use crate::forest::{fit_forest_traced, ForestConfig, ForestModel};
use crate::model_io::Model;
use crate::rng::SeededRng;
use crate::synth::{make_friedman, make_linear_regression, make_sparse_uncorrelated, Friedman, GridSpec};
use crate::tree::{SplitterKind, Tree};

/// Anything that maps a feature vector to a real.
pub trait Regressor {
    fn n_features(&self) -> usize;
    fn predict_row(&self, x: &[f64]) -> f64;
}

impl Regressor for Tree {
    fn n_features(&self) -> usize {
        self.n_features
    }
    fn predict_row(&self, x: &[f64]) -> f64 {
        Tree::predict_row(self, x)
    }
}

impl Regressor for GbmModel {
    fn n_features(&self) -> usize {
        self.n_features
    }
    fn predict_row(&self, x: &[f64]) -> f64 {
        GbmModel::predict_row(self, x)
    }
}

impl Regressor for ForestModel {
    fn n_features(&self) -> usize {
        self.n_features
    }
    fn predict_row(&self, x: &[f64]) -> f64 {
        ForestModel::predict_row(self, x)
    }
}

impl Regressor for Model {
    fn n_features(&self) -> usize {
        Model::n_features(self)
    }
    fn predict_row(&self, x: &[f64]) -> f64 {
        match self {
            Model::Gbm(m) => m.predict_row(x),
            Model::Forest(f) => f.predict_row(x),
        }
    }
}

pub fn mse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::InvalidArgument(format!(
            "mse over {} predictions and {} targets",
            predictions.len(),
            targets.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::InvalidArgument("mse of an empty vector".into()));
    }
    Ok(predictions
        .iter()
        .zip(targets)
        .map(|(p, y)| (y - p) * (y - p))
        .sum::<f64>()
        / predictions.len() as f64)
}

fn check_gap(model: &dyn Regressor, grid: &GridSpec, gap: (f64, f64)) -> Result<()> {
    grid.validate()?;
    if model.n_features() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: model.n_features(),
        });
    }
    let (lo, hi) = gap;
    if !(lo < hi && lo >= grid.lo && hi <= grid.hi) {
        return Err(Error::InvalidArgument(format!(
            "gap ({lo}, {hi}) is not inside the grid [{}, {}]",
            grid.lo, grid.hi
        )));
    }
    Ok(())
}

/// Largest jump between adjacent grid predictions whose midpoint lies in
/// the open interval `gap`. One-feature models only.
pub fn gap_jump_metric(model: &dyn Regressor, grid: &GridSpec, gap: (f64, f64)) -> Result<f64> {
    check_gap(model, grid, gap)?;
    let xs = grid.points();
    let preds: Vec<f64> = xs.iter().map(|&x| model.predict_row(&[x])).collect();
    Ok(xs
        .windows(2)
        .zip(preds.windows(2))
        .filter(|(x, _)| {
            let mid = 0.5 * (x[0] + x[1]);
            gap.0 < mid && mid < gap.1
        })
        .map(|(_, p)| (p[1] - p[0]).abs())
        .fold(0.0, f64::max))
}

/// Number of distinct prediction values at grid points inside `gap`.
pub fn distinct_levels_in_gap(model: &dyn Regressor, grid: &GridSpec, gap: (f64, f64)) -> Result<usize> {
    check_gap(model, grid, gap)?;
    let mut levels: Vec<u64> = grid
        .points()
        .into_iter()
        .filter(|&x| gap.0 < x && x < gap.1)
        .map(|x| model.predict_row(&[x]).to_bits())
        .collect();
    levels.sort_unstable();
    levels.dedup();
    Ok(levels.len())
}

/// MSE over the rows of `d` where `mask` is set.
pub fn masked_mse(model: &dyn Regressor, d: &Dataset, mask: &[bool]) -> Result<f64> {
    if mask.len() != d.n_samples() {
        return Err(Error::InvalidArgument("mask length differs from dataset".into()));
    }
    let (p, y): (Vec<f64>, Vec<f64>) = d
        .rows()
        .zip(d.targets())
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|((x, &y), _)| (model.predict_row(x), y))
        .unzip();
    mse(&p, &y)
}

/// What to fit in each repeat.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelSpec {
    Gbm(SplitterKind),
    RandomForest,
    ExtraTrees,
    /// Predicts the training mean; a baseline and a timing floor.
    Mean,
}

impl ModelSpec {
    pub fn name(&self) -> String {
        match self {
            ModelSpec::Gbm(SplitterKind::Deterministic) => "gbm".into(),
            ModelSpec::Gbm(SplitterKind::PartiallyRandomized) => "prgbm".into(),
            ModelSpec::Gbm(SplitterKind::ExtremelyRandomized { .. }) => "ertgbm".into(),
            ModelSpec::RandomForest => "rf".into(),
            ModelSpec::ExtraTrees => "ert".into(),
            ModelSpec::Mean => "mean".into(),
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "gbm" => ModelSpec::Gbm(SplitterKind::Deterministic),
            "prgbm" => ModelSpec::Gbm(SplitterKind::PartiallyRandomized),
            // K comes from the grid
            "ertgbm" => ModelSpec::Gbm(SplitterKind::ExtremelyRandomized { k: 1 }),
            "rf" => ModelSpec::RandomForest,
            "ert" => ModelSpec::ExtraTrees,
            "mean" => ModelSpec::Mean,
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "unknown model {s:?} (expected gbm, prgbm, ertgbm, rf, ert, mean)"
                )))
            }
        })
    }
}

/// Candidate hyperparameters. Boosting models use `n_stages`,
/// `learning_rate`, `max_depth` (and `k` for `ertgbm`); forests use
/// `n_trees`, `forest_max_depth` (and `k` for `ert`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperGrid {
    pub n_stages: Vec<usize>,
    pub learning_rate: Vec<f64>,
    pub max_depth: Vec<usize>,
    pub n_trees: Vec<usize>,
    pub forest_max_depth: Vec<usize>,
    pub k: Vec<usize>,
}

impl HyperGrid {
    /// The grid used for the benchmark tables.
    pub fn standard() -> Self {
        HyperGrid {
            n_stages: vec![100, 200, 400, 800, 1600],
            learning_rate: vec![0.05, 0.1],
            max_depth: vec![1, 2],
            n_trees: vec![100, 300],
            forest_max_depth: vec![6, 32],
            k: vec![1],
        }
    }

    /// A small grid for smoke runs.
    pub fn quick() -> Self {
        HyperGrid {
            n_stages: vec![50, 100],
            learning_rate: vec![0.1],
            max_depth: vec![3],
            n_trees: vec![50],
            forest_max_depth: vec![32],
            k: vec![1],
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "standard" => Ok(Self::standard()),
            "quick" => Ok(Self::quick()),
            _ => Err(Error::InvalidArgument(format!("unknown grid preset {name:?}"))),
        }
    }

    /// Parses the TOML key/value form, e.g. `learning_rate = [0.05, 0.1]`.
    /// Missing keys fall back to [`HyperGrid::standard`].
    pub fn from_toml(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Partial {
            n_stages: Option<Vec<usize>>,
            learning_rate: Option<Vec<f64>>,
            max_depth: Option<Vec<usize>>,
            n_trees: Option<Vec<usize>>,
            forest_max_depth: Option<Vec<usize>>,
            k: Option<Vec<usize>>,
        }
        let p: Partial =
            toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("grid file: {e}")))?;
        let d = Self::standard();
        let grid = HyperGrid {
            n_stages: p.n_stages.unwrap_or(d.n_stages),
            learning_rate: p.learning_rate.unwrap_or(d.learning_rate),
            max_depth: p.max_depth.unwrap_or(d.max_depth),
            n_trees: p.n_trees.unwrap_or(d.n_trees),
            forest_max_depth: p.forest_max_depth.unwrap_or(d.forest_max_depth),
            k: p.k.unwrap_or(d.k),
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        let nonempty = [
            ("n_stages", self.n_stages.is_empty()),
            ("learning_rate", self.learning_rate.is_empty()),
            ("max_depth", self.max_depth.is_empty()),
            ("n_trees", self.n_trees.is_empty()),
            ("forest_max_depth", self.forest_max_depth.is_empty()),
            ("k", self.k.is_empty()),
        ];
        if let Some((name, _)) = nonempty.iter().find(|(_, e)| *e) {
            return Err(Error::InvalidArgument(format!("grid list {name} is empty")));
        }
        if self.n_trees.contains(&0) || self.k.contains(&0) {
            return Err(Error::InvalidArgument("n_trees and k must be positive".into()));
        }
        if self.max_depth.contains(&0) || self.forest_max_depth.contains(&0) {
            return Err(Error::InvalidArgument("depths must be positive".into()));
        }
        if self.learning_rate.iter().any(|&v| !(v > 0.0 && v <= 1.0)) {
            return Err(Error::InvalidArgument("learning rates must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// One chosen grid point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Hyperparams {
    pub n_stages: Option<usize>,
    pub n_trees: Option<usize>,
    pub learning_rate: Option<f64>,
    pub max_depth: Option<usize>,
    pub k: Option<usize>,
}

impl fmt::Display for Hyperparams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if let Some(v) = self.n_stages {
            parts.push(format!("n_stages={v}"));
        }
        if let Some(v) = self.n_trees {
            parts.push(format!("n_trees={v}"));
        }
        if let Some(v) = self.learning_rate {
            parts.push(format!("learning_rate={v:?}"));
        }
        if let Some(v) = self.max_depth {
            parts.push(format!("max_depth={v}"));
        }
        if let Some(v) = self.k {
            parts.push(format!("k={v}"));
        }
        if parts.is_empty() {
            f.write_str("-")
        } else {
            f.write_str(&parts.join(";"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    Paper,
    Nested,
}

impl FromStr for SelectionMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(SelectionMode::Paper),
            "nested" => Ok(SelectionMode::Nested),
            _ => Err(Error::InvalidArgument(format!("unknown selection mode {s:?}"))),
        }
    }
}

impl fmt::Display for SelectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SelectionMode::Paper => "paper",
            SelectionMode::Nested => "nested",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub model_name: String,
    pub selection_mode: SelectionMode,
    pub per_repeat_mse: Vec<f64>,
    pub mean_mse: f64,
    /// Sample standard deviation (zero for a single repeat).
    pub std_mse: f64,
    /// Fit time of the selected configuration, per repeat.
    pub per_repeat_train_seconds: Vec<f64>,
    /// Fit time of the whole grid, per repeat.
    pub per_repeat_grid_seconds: Vec<f64>,
    /// Selected hyperparameters, per repeat (all equal in paper mode).
    pub chosen_hyperparams: Vec<Hyperparams>,
}

/// A fit-defining grid point; the count axis (stages or trees) is separate.
#[derive(Debug, Clone, Copy)]
struct FitPoint {
    learning_rate: Option<f64>,
    max_depth: Option<usize>,
    k: Option<usize>,
}

fn fit_points(spec: ModelSpec, grid: &HyperGrid) -> Vec<FitPoint> {
    let mut out = Vec::new();
    match spec {
        ModelSpec::Gbm(splitter) => {
            let ks: Vec<Option<usize>> = match splitter {
                SplitterKind::ExtremelyRandomized { .. } => grid.k.iter().map(|&k| Some(k)).collect(),
                _ => vec![None],
            };
            for &lr in &grid.learning_rate {
                for &depth in &grid.max_depth {
                    for &k in &ks {
                        out.push(FitPoint {
                            learning_rate: Some(lr),
                            max_depth: Some(depth),
                            k,
                        });
                    }
                }
            }
        }
        ModelSpec::RandomForest => {
            for &depth in &grid.forest_max_depth {
                out.push(FitPoint {
                    learning_rate: None,
                    max_depth: Some(depth),
                    k: None,
                });
            }
        }
        ModelSpec::ExtraTrees => {
            for &depth in &grid.forest_max_depth {
                for &k in &grid.k {
                    out.push(FitPoint {
                        learning_rate: None,
                        max_depth: Some(depth),
                        k: Some(k),
                    });
                }
            }
        }
        ModelSpec::Mean => out.push(FitPoint {
            learning_rate: None,
            max_depth: None,
            k: None,
        }),
    }
    out
}

fn counts(spec: ModelSpec, grid: &HyperGrid) -> Vec<usize> {
    let mut c = match spec {
        ModelSpec::Gbm(_) => grid.n_stages.clone(),
        ModelSpec::RandomForest | ModelSpec::ExtraTrees => grid.n_trees.clone(),
        ModelSpec::Mean => vec![0],
    };
    c.sort_unstable();
    c.dedup();
    c
}

fn hyperparams(spec: ModelSpec, point: &FitPoint, count: usize) -> Hyperparams {
    let mut h = Hyperparams {
        learning_rate: point.learning_rate,
        max_depth: point.max_depth,
        k: point.k,
        ..Hyperparams::default()
    };
    match spec {
        ModelSpec::Gbm(_) => h.n_stages = Some(count),
        ModelSpec::RandomForest | ModelSpec::ExtraTrees => h.n_trees = Some(count),
        ModelSpec::Mean => {}
    }
    h
}

/// Scores of one fit point on `eval` at every count, with fit times.
struct PointScores {
    mse: Vec<f64>,
    seconds: Vec<f64>,
}

fn fit_and_score(
    spec: ModelSpec,
    point: &FitPoint,
    counts: &[usize],
    fit_on: &Dataset,
    eval_on: &Dataset,
    seed: u64,
) -> Result<PointScores> {
    let max_count = *counts.last().unwrap();
    match spec {
        ModelSpec::Gbm(splitter) => {
            let splitter = match (splitter, point.k) {
                (SplitterKind::ExtremelyRandomized { .. }, Some(k)) => SplitterKind::ExtremelyRandomized { k },
                (s, _) => s,
            };
            let config = GbmConfig {
                n_stages: max_count,
                learning_rate: point.learning_rate.unwrap(),
                max_depth: point.max_depth.unwrap(),
                min_samples_split: 2,
                splitter,
                seed,
                early_stopping: None,
            };
            let (model, trace) = fit_gbm_traced(fit_on, &config, &SquaredError)?;
            let staged = model.staged_mse(eval_on)?;
            Ok(PointScores {
                mse: counts.iter().map(|&c| staged[c]).collect(),
                seconds: counts.iter().map(|&c| trace.stage_seconds[c]).collect(),
            })
        }
        ModelSpec::RandomForest | ModelSpec::ExtraTrees => {
            let base = if spec == ModelSpec::RandomForest {
                ForestConfig::random_forest(fit_on.n_features())
            } else {
                ForestConfig {
                    splitter: SplitterKind::ExtremelyRandomized { k: point.k.unwrap_or(1) },
                    ..ForestConfig::extra_trees()
                }
            };
            let config = ForestConfig {
                n_trees: max_count,
                max_depth: point.max_depth.unwrap(),
                seed,
                ..base
            };
            let (model, seconds) = fit_forest_traced(fit_on, &config)?;
            let mut mse_out = Vec::with_capacity(counts.len());
            for &c in counts {
                let preds: Vec<f64> = eval_on.rows().map(|x| model.predict_row_prefix(x, c)).collect();
                mse_out.push(mse(&preds, eval_on.targets())?);
            }
            Ok(PointScores {
                mse: mse_out,
                seconds: counts.iter().map(|&c| seconds[c - 1]).collect(),
            })
        }
        ModelSpec::Mean => {
            let start = Instant::now();
            let mean = fit_on.targets().iter().sum::<f64>() / fit_on.n_samples() as f64;
            let seconds = start.elapsed().as_secs_f64();
            let preds = vec![mean; eval_on.n_samples()];
            Ok(PointScores {
                mse: vec![mse(&preds, eval_on.targets())?],
                seconds: vec![seconds],
            })
        }
    }
}

struct RepeatOutcome {
    /// `[point][count]` test MSE (paper mode) or the single selected result.
    scores: Vec<PointScores>,
    grid_seconds: f64,
    nested: Option<(f64, f64, Hyperparams)>,
}

fn run_repeat(
    d: &Dataset,
    spec: ModelSpec,
    points: &[FitPoint],
    counts: &[usize],
    mode: SelectionMode,
    repeat: usize,
    mut rng: SeededRng,
) -> Result<RepeatOutcome> {
    let wrap = |e: Error| match e {
        Error::Numeric(m) => Error::Numeric(format!("repeat {repeat}: {m}")),
        other => Error::InvalidData(format!("repeat {repeat}: {other}")),
    };
    let split = split_train_test(d, &mut rng)?;
    let model_seed = rng.next_u64();
    match mode {
        SelectionMode::Paper => {
            let mut grid_seconds = 0.0;
            let mut scores = Vec::with_capacity(points.len());
            for p in points {
                let s = fit_and_score(spec, p, counts, &split.train, &split.test, model_seed).map_err(wrap)?;
                grid_seconds += s.seconds.last().copied().unwrap_or(0.0);
                scores.push(s);
            }
            Ok(RepeatOutcome {
                scores,
                grid_seconds,
                nested: None,
            })
        }
        SelectionMode::Nested => {
            let inner = split_train_test(&split.train, &mut rng).map_err(wrap)?;
            let mut grid_seconds = 0.0;
            let mut best: Option<(f64, usize, usize)> = None;
            for (pi, p) in points.iter().enumerate() {
                let s = fit_and_score(spec, p, counts, &inner.train, &inner.test, model_seed).map_err(wrap)?;
                grid_seconds += s.seconds.last().copied().unwrap_or(0.0);
                for (ci, &v) in s.mse.iter().enumerate() {
                    if best.is_none_or(|(b, _, _)| v < b) {
                        best = Some((v, pi, ci));
                    }
                }
            }
            let (_, pi, ci) = best.expect("grid is nonempty");
            let final_scores = fit_and_score(
                spec,
                &points[pi],
                &counts[ci..=ci],
                &split.train,
                &split.test,
                model_seed,
            )
            .map_err(wrap)?;
            grid_seconds += final_scores.seconds[0];
            Ok(RepeatOutcome {
                scores: Vec::new(),
                grid_seconds,
                nested: Some((
                    final_scores.mse[0],
                    final_scores.seconds[0],
                    hyperparams(spec, &points[pi], counts[ci]),
                )),
            })
        }
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// [`run_protocol_with_mode`] in [`SelectionMode::Paper`].
pub fn run_protocol(
    d: &Dataset,
    spec: ModelSpec,
    grid: &HyperGrid,
    repeats: usize,
    seed: u64,
) -> Result<CvReport> {
    run_protocol_with_mode(d, spec, grid, repeats, seed, SelectionMode::Paper)
}

/// Runs `repeats` random splits. Repeats run in parallel on the current
/// rayon pool; each gets a generator split off in order up front, so the
/// report is identical for any thread count (timings aside).
pub fn run_protocol_with_mode(
    d: &Dataset,
    spec: ModelSpec,
    grid: &HyperGrid,
    repeats: usize,
    seed: u64,
    mode: SelectionMode,
) -> Result<CvReport> {
    if repeats == 0 {
        return Err(Error::InvalidArgument("need at least one repeat".into()));
    }
    grid.validate()?;
    let points = fit_points(spec, grid);
    let counts = counts(spec, grid);
    let children = SeededRng::new(seed).split_n(repeats);
    let outcomes = children
        .into_par_iter()
        .enumerate()
        .map(|(r, rng)| run_repeat(d, spec, &points, &counts, mode, r, rng))
        .collect::<Result<Vec<_>>>()?;

    let grid_seconds: Vec<f64> = outcomes.iter().map(|o| o.grid_seconds).collect();
    let (per_repeat_mse, train_seconds, chosen) = match mode {
        SelectionMode::Paper => {
            let mut best: Option<(f64, usize, usize)> = None;
            for pi in 0..points.len() {
                for ci in 0..counts.len() {
                    let mean = outcomes.iter().map(|o| o.scores[pi].mse[ci]).sum::<f64>() / repeats as f64;
                    if best.is_none_or(|(b, _, _)| mean < b) {
                        best = Some((mean, pi, ci));
                    }
                }
            }
            let (_, pi, ci) = best.expect("grid is nonempty");
            let h = hyperparams(spec, &points[pi], counts[ci]);
            (
                outcomes.iter().map(|o| o.scores[pi].mse[ci]).collect::<Vec<_>>(),
                outcomes.iter().map(|o| o.scores[pi].seconds[ci]).collect::<Vec<_>>(),
                vec![h; repeats],
            )
        }
        SelectionMode::Nested => {
            let mut mses = Vec::with_capacity(repeats);
            let mut secs = Vec::with_capacity(repeats);
            let mut hs = Vec::with_capacity(repeats);
            for o in &outcomes {
                let (m, s, h) = o.nested.expect("nested outcome");
                mses.push(m);
                secs.push(s);
                hs.push(h);
            }
            (mses, secs, hs)
        }
    };
    let (mean_mse, std_mse) = mean_std(&per_repeat_mse);
    Ok(CvReport {
        model_name: spec.name(),
        selection_mode: mode,
        per_repeat_mse,
        mean_mse,
        std_mse,
        per_repeat_train_seconds: train_seconds,
        per_repeat_grid_seconds: grid_seconds,
        chosen_hyperparams: chosen,
    })
}

/// Where a benchmark dataset comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    Friedman { which: Friedman, n: usize, noise_sd: f64 },
    Sparse { n: usize, noise_sd: f64 },
    Regression { n: usize, m: usize, noise_sd: f64 },
    Csv { path: PathBuf, target: TargetColumn },
}

impl DatasetSource {
    /// Named synthetic dataset with default noise: 1 for `friedman1` and
    /// `sparse`, 0 otherwise. `regression` has 100 features.
    pub fn synthetic(name: &str, n: usize) -> Result<Self> {
        Ok(match name {
            "friedman1" => DatasetSource::Friedman { which: Friedman::One, n, noise_sd: 1.0 },
            "friedman2" => DatasetSource::Friedman { which: Friedman::Two, n, noise_sd: 0.0 },
            "friedman3" => DatasetSource::Friedman { which: Friedman::Three, n, noise_sd: 0.0 },
            "sparse" => DatasetSource::Sparse { n, noise_sd: 1.0 },
            "regression" => DatasetSource::Regression { n, m: 100, noise_sd: 0.0 },
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "unknown dataset {name:?} (expected friedman1, friedman2, friedman3, sparse, regression or csv:<path>)"
                )))
            }
        })
    }

    /// Label used in report files.
    pub fn name(&self) -> String {
        match self {
            DatasetSource::Friedman { which: Friedman::One, .. } => "friedman1".into(),
            DatasetSource::Friedman { which: Friedman::Two, .. } => "friedman2".into(),
            DatasetSource::Friedman { which: Friedman::Three, .. } => "friedman3".into(),
            DatasetSource::Sparse { .. } => "sparse".into(),
            DatasetSource::Regression { .. } => "regression".into(),
            DatasetSource::Csv { path, .. } => format!("csv:{}", path.display()),
        }
    }

    pub fn load(&self, rng: &mut SeededRng) -> Result<Dataset> {
        match self {
            DatasetSource::Friedman { which, n, noise_sd } => make_friedman(*which, *n, rng, *noise_sd),
            DatasetSource::Sparse { n, noise_sd } => make_sparse_uncorrelated(*n, rng, *noise_sd),
            DatasetSource::Regression { n, m, noise_sd } => make_linear_regression(*n, *m, rng, *noise_sd),
            DatasetSource::Csv { path, target } => load_csv(path, target.clone()),
        }
    }
}

/// A full benchmark: every model on every dataset.
#[derive(Debug, Clone)]
pub struct BenchmarkPlan {
    pub datasets: Vec<DatasetSource>,
    pub models: Vec<ModelSpec>,
    pub grid: HyperGrid,
    pub repeats: usize,
    pub seed: u64,
    pub selection: SelectionMode,
}

impl BenchmarkPlan {
    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::InvalidArgument("need at least one repeat".into()));
        }
        let mut names: Vec<String> = self.models.iter().map(|m| m.name()).collect();
        names.sort();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("models are listed twice".into()));
        }
        self.grid.validate()
    }
}

/// Runs the plan, calling `progress` after each (dataset, model) report.
///
/// Dataset `i` uses the `i`-th child of `SeededRng::new(seed)`: a further
/// child generates the data, then one draw seeds the protocol, so every
/// model on a dataset sees the same splits.
pub fn run_benchmark(
    plan: &BenchmarkPlan,
    mut progress: impl FnMut(&str, &CvReport),
) -> Result<Vec<(String, CvReport)>> {
    plan.validate()?;
    let children = SeededRng::new(plan.seed).split_n(plan.datasets.len());
    let mut rows = Vec::with_capacity(plan.datasets.len() * plan.models.len());
    for (source, mut rng) in plan.datasets.iter().zip(children) {
        let d = source.load(&mut rng.split())?;
        let protocol_seed = rng.next_u64();
        let name = source.name();
        for &spec in &plan.models {
            let report = run_protocol_with_mode(&d, spec, &plan.grid, plan.repeats, protocol_seed, plan.selection)?;
            progress(&name, &report);
            rows.push((name.clone(), report));
        }
    }
    Ok(rows)
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn flush<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush().map_err(|e| Error::io("<report writer>", e))
}

/// One row per (dataset, model, repeat). No timing columns, so the file
/// is reproducible byte for byte.
pub fn write_repeats_csv<W: Write>(rows: &[(String, CvReport)], writer: W) -> Result<()> {
    let mut w = csv_writer(writer);
    w.write_record(["dataset", "model", "selection", "repeat", "mse", "hyperparams"])?;
    for (dataset, report) in rows {
        for (r, (m, h)) in report
            .per_repeat_mse
            .iter()
            .zip(&report.chosen_hyperparams)
            .enumerate()
        {
            w.write_record([
                dataset.clone(),
                report.model_name.clone(),
                report.selection_mode.to_string(),
                r.to_string(),
                format!("{m:?}"),
                h.to_string(),
            ])?;
        }
    }
    flush(w)
}

fn table<W: Write>(
    rows: &[(String, CvReport)],
    writer: W,
    models: &[String],
    cell: impl Fn(&CvReport) -> String,
) -> Result<()> {
    let mut datasets: Vec<&String> = Vec::new();
    for (d, _) in rows {
        if !datasets.contains(&d) {
            datasets.push(d);
        }
    }
    let mut w = csv_writer(writer);
    let mut header = vec!["dataset".to_string()];
    header.extend(models.iter().cloned());
    w.write_record(&header)?;
    for d in datasets {
        let mut rec = vec![d.clone()];
        for m in models {
            rec.push(
                rows.iter()
                    .find(|(dd, r)| dd == d && &r.model_name == m)
                    .map(|(_, r)| cell(r))
                    .unwrap_or_default(),
            );
        }
        w.write_record(&rec)?;
    }
    flush(w)
}

/// Mean test MSE with datasets as rows and models as columns.
pub fn write_summary_csv<W: Write>(rows: &[(String, CvReport)], models: &[String], writer: W) -> Result<()> {
    table(rows, writer, models, |r| format!("{:?}", r.mean_mse))
}

/// Seconds per model and dataset: total fitting time of the selected
/// configuration plus grid search, summed over repeats.
pub fn write_times_csv<W: Write>(rows: &[(String, CvReport)], models: &[String], writer: W) -> Result<()> {
    table(rows, writer, models, |r| {
        format!("{:.6}", r.per_repeat_grid_seconds.iter().sum::<f64>())
    })
}
