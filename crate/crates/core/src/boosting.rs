//! Stagewise gradient boosting with regression trees.
//!
//! Starting from the constant `g0 = mean(y)`, each stage fits a tree `h_t` to
//! the pseudo-residuals of the current model, picks the step `gamma_t` that
//! minimises the training loss along `h_t`, and adds `nu * gamma_t * h_t`.
//! For squared error the residual is `y - g(x)`; the factor 2 from the
//! derivative is absorbed by the line search.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::tree::{build_tree_on, NodeData, SplitterKind, Tree, TreeParams};

pub trait Loss: Send + Sync {
    fn value(&self, y: f64, z: f64) -> f64;

    /// `-d value / d z`.
    fn negative_gradient(&self, y: f64, z: f64) -> f64;

    /// Target each tree is fitted to. Any positive multiple of the negative
    /// gradient works since the line search rescales the tree.
    fn residual(&self, y: f64, z: f64) -> f64 {
        self.negative_gradient(y, z)
    }

    /// `argmin_gamma sum_i value(y_i, current_i + gamma * step_i)`.
    fn line_search(&self, targets: &[f64], current: &[f64], step: &[f64]) -> f64 {
        golden_section_gamma(self, targets, current, step)
    }

    fn total(&self, targets: &[f64], predictions: &[f64]) -> f64 {
        targets
            .iter()
            .zip(predictions)
            .map(|(&y, &z)| self.value(y, z))
            .sum()
    }
}

/// `(y - z)^2`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SquaredError;

impl Loss for SquaredError {
    #[inline]
    fn value(&self, y: f64, z: f64) -> f64 {
        (y - z) * (y - z)
    }

    #[inline]
    fn negative_gradient(&self, y: f64, z: f64) -> f64 {
        2.0 * (y - z)
    }

    #[inline]
    fn residual(&self, y: f64, z: f64) -> f64 {
        y - z
    }

    /// Closed form `sum h (y - g) / sum h^2`.
    fn line_search(&self, targets: &[f64], current: &[f64], step: &[f64]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for ((&y, &g), &h) in targets.iter().zip(current).zip(step) {
            num += h * (y - g);
            den += h * h;
        }
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }
}

/// Optimal stage coefficient; zero when the tree predicts zero everywhere.
pub fn line_search_gamma(targets: &[f64], current: &[f64], step: &[f64], loss: &dyn Loss) -> f64 {
    if step.iter().all(|&h| h == 0.0) {
        return 0.0;
    }
    loss.line_search(targets, current, step)
}

/// Golden-section minimisation of `phi(gamma) = sum value(y, g + gamma h)`.
///
/// Bracket: starting from step 1, the search walks in whichever direction
/// lowers `phi(0)`, doubling until `phi` rises again (at most 60 doublings),
/// which brackets the minimum of a convex `phi`. If neither `+1` nor `-1`
/// improves on 0 the bracket is `[-1, 1]`. Sections stop once the interval is
/// below `1e-12 * max(1, |gamma|)`.
pub fn golden_section_gamma<L: Loss + ?Sized>(
    loss: &L,
    targets: &[f64],
    current: &[f64],
    step: &[f64],
) -> f64 {
    let phi = |gamma: f64| -> f64 {
        targets
            .iter()
            .zip(current)
            .zip(step)
            .map(|((&y, &g), &h)| loss.value(y, g + gamma * h))
            .sum()
    };
    let f0 = phi(0.0);
    let (mut a, mut b) = if phi(1.0) < f0 {
        let mut s = 1.0;
        let mut fs = phi(s);
        for _ in 0..60 {
            let f2 = phi(2.0 * s);
            if f2 >= fs {
                break;
            }
            s *= 2.0;
            fs = f2;
        }
        (s / 2.0, 2.0 * s)
    } else if phi(-1.0) < f0 {
        let mut s = 1.0;
        let mut fs = phi(-s);
        for _ in 0..60 {
            let f2 = phi(-2.0 * s);
            if f2 >= fs {
                break;
            }
            s *= 2.0;
            fs = f2;
        }
        (-2.0 * s, -s / 2.0)
    } else {
        (-1.0, 1.0)
    };

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = phi(c);
    let mut fd = phi(d);
    for _ in 0..400 {
        if (b - a).abs() <= 1e-12 * c.abs().max(1.0) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = phi(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = phi(d);
        }
    }
    let gamma = (a + b) / 2.0;
    if phi(gamma) <= f0 {
        gamma
    } else {
        0.0
    }
}

/// Hold out a fraction of the training rows and stop once the held-out loss
/// has not improved for `patience` stages; the model is cut back to the best
/// stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarlyStopping {
    pub validation_fraction: f64,
    pub patience: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbmConfig {
    pub n_stages: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub splitter: SplitterKind,
    pub seed: u64,
    #[serde(default)]
    pub early_stopping: Option<EarlyStopping>,
}

impl Default for GbmConfig {
    fn default() -> Self {
        GbmConfig {
            n_stages: 100,
            learning_rate: 0.1,
            max_depth: 3,
            min_samples_split: 2,
            splitter: SplitterKind::Deterministic,
            seed: 0,
            early_stopping: None,
        }
    }
}

impl GbmConfig {
    pub fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            min_samples_split: self.min_samples_split,
            splitter: self.splitter,
            max_features: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must lie in (0, 1], got {}",
                self.learning_rate
            )));
        }
        if let Some(es) = self.early_stopping {
            if !(es.validation_fraction > 0.0 && es.validation_fraction < 1.0) {
                return Err(Error::InvalidArgument(
                    "early stopping validation fraction must lie in (0, 1)".into(),
                ));
            }
            if es.patience == 0 {
                return Err(Error::InvalidArgument("early stopping patience must be >= 1".into()));
            }
        }
        self.splitter.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    /// Shrunk step `nu * gamma`.
    pub coefficient: f64,
    pub tree: Tree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbmModel {
    pub init: f64,
    pub stages: Vec<Stage>,
    pub config: GbmConfig,
    pub n_features: usize,
}

/// Side information recorded while fitting.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitTrace {
    /// Wall-clock seconds since the fit started, after each stage
    /// (`stage_seconds[0]` is initialisation).
    pub stage_seconds: Vec<f64>,
    /// Training loss of `g_0, g_1, ...` on the rows the trees were fitted to.
    pub train_loss: Vec<f64>,
}

impl GbmModel {
    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got,
            });
        }
        Ok(())
    }

    #[inline]
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut acc = self.init;
        for s in &self.stages {
            acc += s.coefficient * s.tree.predict_row(x);
        }
        acc
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        Ok(self.predict_row(x))
    }

    /// Partial sums `g_0(x), g_1(x), ..., g_M(x)`.
    pub fn predict_staged(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        let mut out = Vec::with_capacity(self.stages.len() + 1);
        let mut acc = self.init;
        out.push(acc);
        for s in &self.stages {
            acc += s.coefficient * s.tree.predict_row(x);
            out.push(acc);
        }
        Ok(out)
    }

    pub fn predict_dataset(&self, d: &Dataset) -> Result<Vec<f64>> {
        self.check_dim(d.n_features())?;
        Ok(d.rows().map(|x| self.predict_row(x)).collect())
    }

    /// Mean squared error on `d` after each stage, length `M + 1`.
    pub fn staged_mse(&self, d: &Dataset) -> Result<Vec<f64>> {
        self.check_dim(d.n_features())?;
        let n = d.n_samples() as f64;
        let mut pred = vec![self.init; d.n_samples()];
        let sse = |pred: &[f64]| -> f64 {
            pred.iter()
                .zip(d.targets())
                .map(|(p, y)| (y - p) * (y - p))
                .sum::<f64>()
                / n
        };
        let mut out = Vec::with_capacity(self.stages.len() + 1);
        out.push(sse(&pred));
        for s in &self.stages {
            for (p, x) in pred.iter_mut().zip(d.rows()) {
                *p += s.coefficient * s.tree.predict_row(x);
            }
            out.push(sse(&pred));
        }
        Ok(out)
    }

    /// Copy keeping only the first `n` stages.
    pub fn truncated(&self, n: usize) -> GbmModel {
        GbmModel {
            init: self.init,
            stages: self.stages[..n.min(self.stages.len())].to_vec(),
            config: self.config,
            n_features: self.n_features,
        }
    }
}

/// Fits a squared-error model.
pub fn fit_gbm(train: &Dataset, config: &GbmConfig) -> Result<GbmModel> {
    fit_gbm_traced(train, config, &SquaredError).map(|(m, _)| m)
}

pub fn fit_gbm_traced(
    train: &Dataset,
    config: &GbmConfig,
    loss: &dyn Loss,
) -> Result<(GbmModel, FitTrace)> {
    config.validate()?;
    let start = Instant::now();
    let mut rng = SeededRng::new(config.seed);
    let tree_rng = rng.split();

    let Some(es) = config.early_stopping else {
        return fit_stages(train, config, loss, tree_rng, None, start);
    };
    // inner train / validation split
    let n = train.n_samples();
    let n_val = ((n as f64) * es.validation_fraction).round() as usize;
    if n_val == 0 || n_val >= n {
        return Err(Error::InvalidArgument(format!(
            "early stopping leaves no rows on one side ({n} rows, fraction {})",
            es.validation_fraction
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng.split());
    let (val_idx, fit_idx) = perm.split_at(n_val);
    let mut fit_idx = fit_idx.to_vec();
    let mut val_idx = val_idx.to_vec();
    fit_idx.sort_unstable();
    val_idx.sort_unstable();
    let inner = train.subset(&fit_idx);
    let validation = train.subset(&val_idx);
    fit_stages(&inner, config, loss, tree_rng, Some((&validation, es.patience)), start)
}

fn fit_stages(
    train: &Dataset,
    config: &GbmConfig,
    loss: &dyn Loss,
    mut rng: SeededRng,
    validation: Option<(&Dataset, usize)>,
    start: Instant,
) -> Result<(GbmModel, FitTrace)> {
    let n = train.n_samples();
    let targets = train.targets();
    let columns = train.columns();
    let indices: Vec<usize> = (0..n).collect();
    let params = config.tree_params();
    params.validate(train.n_features())?;

    let init = targets.iter().sum::<f64>() / n as f64;
    let mut pred = vec![init; n];
    let mut residuals = vec![0.0; n];
    let mut step = vec![0.0; n];
    let mut candidate = vec![0.0; n];
    let mut current_loss = loss.total(targets, &pred);

    let mut trace = FitTrace {
        stage_seconds: vec![start.elapsed().as_secs_f64()],
        train_loss: vec![current_loss],
    };
    let mut stages = Vec::with_capacity(config.n_stages);

    let mut val_state = validation.map(|(v, patience)| {
        let p = vec![init; v.n_samples()];
        let l = loss.total(v.targets(), &p);
        (v, patience, p, l, 0usize)
    });

    for t in 0..config.n_stages {
        for i in 0..n {
            residuals[i] = loss.residual(targets[i], pred[i]);
        }
        if let Some(i) = residuals.iter().position(|r| !r.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite residual at row {i} in stage {}",
                t + 1
            )));
        }
        let mut stage_rng = rng.split();
        let (tree, _) = build_tree_on(
            NodeData::new(&columns, &residuals, &indices),
            &params,
            &mut stage_rng,
            Some(&mut step),
        )?;
        let gamma = line_search_gamma(targets, &pred, &step, loss);
        let mut coefficient = config.learning_rate * gamma;
        if !coefficient.is_finite() {
            return Err(Error::Numeric(format!("non-finite step in stage {}", t + 1)));
        }
        for i in 0..n {
            candidate[i] = pred[i] + coefficient * step[i];
        }
        let new_loss = loss.total(targets, &candidate);
        // gamma = 0 is always feasible
        if new_loss <= current_loss {
            std::mem::swap(&mut pred, &mut candidate);
            current_loss = new_loss;
        } else {
            coefficient = 0.0;
        }
        stages.push(Stage { coefficient, tree });
        trace.stage_seconds.push(start.elapsed().as_secs_f64());
        trace.train_loss.push(current_loss);

        if let Some((v, patience, vp, best, best_at)) = val_state.as_mut() {
            let stage = stages.last().unwrap();
            for (p, x) in vp.iter_mut().zip(v.rows()) {
                *p += stage.coefficient * stage.tree.predict_row(x);
            }
            let l = loss.total(v.targets(), vp);
            if l < *best {
                *best = l;
                *best_at = t + 1;
            } else if t + 1 - *best_at >= *patience {
                break;
            }
        }
    }
    if let Some((.., best_at)) = val_state {
        stages.truncate(best_at);
        trace.stage_seconds.truncate(best_at + 1);
        trace.train_loss.truncate(best_at + 1);
    }
    Ok((
        GbmModel {
            init,
            stages,
            config: *config,
            n_features: train.n_features(),
        },
        trace,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::one_dim_function;
    use approx::assert_abs_diff_eq;

    fn line(n: usize) -> Dataset {
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| one_dim_function(x)).collect();
        Dataset::from_flat(xs, 1, ys).unwrap()
    }

    #[test]
    fn zero_stages_predict_the_mean() {
        let d = line(20);
        let cfg = GbmConfig { n_stages: 0, ..GbmConfig::default() };
        let m = fit_gbm(&d, &cfg).unwrap();
        let mean = d.targets().iter().sum::<f64>() / 20.0;
        assert_eq!(m.predict(&[0.3]).unwrap(), mean);
        assert_eq!(m.predict_staged(&[0.3]).unwrap(), vec![mean]);
    }

    #[test]
    fn constant_targets_stay_constant() {
        let d = Dataset::from_flat((0..10).map(f64::from).collect(), 1, vec![2.5; 10]).unwrap();
        for s in [SplitterKind::Deterministic, SplitterKind::PartiallyRandomized] {
            let cfg = GbmConfig { n_stages: 5, splitter: s, ..GbmConfig::default() };
            let m = fit_gbm(&d, &cfg).unwrap();
            for x in [-3.0, 0.0, 4.5, 100.0] {
                assert_eq!(m.predict(&[x]).unwrap(), 2.5);
            }
            assert!(m.stages.iter().all(|s| s.tree.n_leaves == 1));
        }
    }

    #[test]
    fn interpolates_noiseless_line() {
        let d = line(20);
        let cfg = GbmConfig {
            n_stages: 50,
            learning_rate: 1.0,
            max_depth: 5,
            ..GbmConfig::default()
        };
        let m = fit_gbm(&d, &cfg).unwrap();
        let mse = *m.staged_mse(&d).unwrap().last().unwrap();
        assert!(mse < 1e-6, "training mse {mse}");
    }

    #[test]
    fn staged_telescopes() {
        let d = line(30);
        let cfg = GbmConfig { n_stages: 10, splitter: SplitterKind::PartiallyRandomized, ..GbmConfig::default() };
        let m = fit_gbm(&d, &cfg).unwrap();
        let x = [0.42];
        let staged = m.predict_staged(&x).unwrap();
        assert_eq!(staged.len(), 11);
        for (k, s) in m.stages.iter().enumerate() {
            assert_eq!(staged[k + 1], staged[k] + s.coefficient * s.tree.predict_row(&x));
        }
        assert_eq!(*staged.last().unwrap(), m.predict(&x).unwrap());
    }

    #[test]
    fn dimension_checked() {
        let m = fit_gbm(&line(10), &GbmConfig { n_stages: 2, ..GbmConfig::default() }).unwrap();
        assert!(m.predict(&[0.1, 0.2]).is_err());
        assert!(m.predict_staged(&[]).is_err());
    }

    #[test]
    fn gamma_for_ideal_tree_is_one() {
        let y = [1.0, -2.0, 0.5];
        let g = [0.0, 0.5, 0.5];
        let h: Vec<f64> = y.iter().zip(&g).map(|(a, b)| a - b).collect();
        assert_abs_diff_eq!(line_search_gamma(&y, &g, &h, &SquaredError), 1.0, epsilon = 1e-15);
        assert_eq!(line_search_gamma(&y, &g, &[0.0; 3], &SquaredError), 0.0);
    }

    #[test]
    fn closed_form_matches_golden_section() {
        let mut rng = SeededRng::new(12);
        for _ in 0..20 {
            let n = 15;
            // comparison-based search resolves gamma to about sqrt(eps * phi_min / sum h^2),
            // so keep the residual around the true step small
            let true_gamma = rng.uniform_unchecked(-2.0, 2.0);
            let g: Vec<f64> = (0..n).map(|_| rng.uniform_unchecked(-1.0, 1.0)).collect();
            let h: Vec<f64> = (0..n).map(|_| rng.uniform_unchecked(-3.0, 3.0)).collect();
            let y: Vec<f64> = (0..n)
                .map(|i| g[i] + true_gamma * h[i] + rng.uniform_unchecked(-0.01, 0.01))
                .collect();
            let closed = SquaredError.line_search(&y, &g, &h);
            let golden = golden_section_gamma(&SquaredError, &y, &g, &h);
            assert_abs_diff_eq!(closed, golden, epsilon = 1e-8);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = SeededRng::new(1);
        let eps = 1e-5;
        for _ in 0..100 {
            let y = rng.uniform_unchecked(-10.0, 10.0);
            let z = rng.uniform_unchecked(-10.0, 10.0);
            let fd = -(SquaredError.value(y, z + eps) - SquaredError.value(y, z - eps)) / (2.0 * eps);
            assert!((fd - SquaredError.negative_gradient(y, z)).abs() < 1e-6);
        }
    }

    #[test]
    fn early_stopping_truncates() {
        let mut rng = SeededRng::new(4);
        let xs: Vec<f64> = (0..80).map(|_| rng.uniform_unchecked(0.0, 1.0)).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| one_dim_function(x) + rng.uniform_unchecked(-0.5, 0.5)).collect();
        let d = Dataset::from_flat(xs, 1, ys).unwrap();
        let cfg = GbmConfig {
            n_stages: 500,
            learning_rate: 0.5,
            max_depth: 4,
            early_stopping: Some(EarlyStopping { validation_fraction: 0.25, patience: 10 }),
            ..GbmConfig::default()
        };
        let m = fit_gbm(&d, &cfg).unwrap();
        assert!(m.stages.len() < 500);
    }

    #[test]
    fn bad_config() {
        let d = line(10);
        assert!(fit_gbm(&d, &GbmConfig { learning_rate: 0.0, ..GbmConfig::default() }).is_err());
        assert!(fit_gbm(&d, &GbmConfig { learning_rate: 1.5, ..GbmConfig::default() }).is_err());
        assert!(fit_gbm(&d, &GbmConfig { max_depth: 0, ..GbmConfig::default() }).is_err());
    }
}
