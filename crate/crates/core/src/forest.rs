//! Averaging ensembles used as baselines: bagged random forests with
//! per-node feature subsampling, and extra-trees forests grown on the full
//! sample with extremely randomized splits.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::tree::{build_tree_on, NodeData, SplitterKind, Tree, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    /// Features tried per node; `None` means all of them.
    pub max_features: Option<usize>,
    pub bootstrap: bool,
    pub splitter: SplitterKind,
    pub seed: u64,
}

impl ForestConfig {
    /// Bagged CART trees with `max(1, m/3)` features per node.
    pub fn random_forest(n_features: usize) -> Self {
        ForestConfig {
            n_trees: 100,
            max_depth: 32,
            min_samples_split: 2,
            max_features: Some((n_features / 3).max(1)),
            bootstrap: true,
            splitter: SplitterKind::Deterministic,
            seed: 0,
        }
    }

    /// Unbagged trees with a single random split candidate per node.
    pub fn extra_trees() -> Self {
        ForestConfig {
            n_trees: 100,
            max_depth: 32,
            min_samples_split: 2,
            max_features: None,
            bootstrap: false,
            splitter: SplitterKind::ExtremelyRandomized { k: 1 },
            seed: 0,
        }
    }

    pub fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            min_samples_split: self.min_samples_split,
            splitter: self.splitter,
            max_features: self.max_features,
        }
    }

    pub fn validate(&self, n_features: usize) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidArgument("forest needs at least one tree".into()));
        }
        self.tree_params().validate(n_features)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub config: ForestConfig,
    pub n_features: usize,
}

/// Mean that does not depend on the order of `values` and stays inside
/// their range.
fn order_free_mean(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    mean.clamp(values[0], values[values.len() - 1])
}

impl ForestModel {
    /// Mean prediction of the first `k` trees.
    pub fn predict_row_prefix(&self, x: &[f64], k: usize) -> f64 {
        let mut preds: Vec<f64> = self.trees[..k].iter().map(|t| t.predict_row(x)).collect();
        order_free_mean(&mut preds)
    }

    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.predict_row_prefix(x, self.trees.len())
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        Ok(self.predict_row(x))
    }

    pub fn predict_dataset(&self, d: &Dataset) -> Result<Vec<f64>> {
        if d.n_features() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: d.n_features(),
            });
        }
        Ok(d.rows().map(|x| self.predict_row(x)).collect())
    }
}

/// `n` draws with replacement from `0..n`.
pub fn bootstrap_indices(n: usize, rng: &mut SeededRng) -> Vec<usize> {
    (0..n).map(|_| rng.index(n)).collect()
}

fn grow_member(
    columns: &[Vec<f64>],
    targets: &[f64],
    params: &TreeParams,
    bootstrap: bool,
    mut rng: SeededRng,
) -> Result<Tree> {
    let n = targets.len();
    let indices: Vec<usize> = if bootstrap {
        bootstrap_indices(n, &mut rng)
    } else {
        (0..n).collect()
    };
    build_tree_on(NodeData::new(columns, targets, &indices), params, &mut rng, None).map(|(t, _)| t)
}

/// Trees are grown in parallel; each gets its own generator split off in
/// order beforehand, so the result does not depend on the thread count.
pub fn fit_forest(train: &Dataset, config: &ForestConfig) -> Result<ForestModel> {
    config.validate(train.n_features())?;
    let columns = train.columns();
    let params = config.tree_params();
    let children = SeededRng::new(config.seed).split_n(config.n_trees);
    let trees = children
        .into_par_iter()
        .map(|rng| grow_member(&columns, train.targets(), &params, config.bootstrap, rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(ForestModel {
        trees,
        config: *config,
        n_features: train.n_features(),
    })
}

/// Sequential [`fit_forest`] returning cumulative seconds after each tree.
/// Produces the same trees as [`fit_forest`].
pub fn fit_forest_traced(train: &Dataset, config: &ForestConfig) -> Result<(ForestModel, Vec<f64>)> {
    let start = Instant::now();
    config.validate(train.n_features())?;
    let columns = train.columns();
    let params = config.tree_params();
    let children = SeededRng::new(config.seed).split_n(config.n_trees);
    let mut trees = Vec::with_capacity(config.n_trees);
    let mut seconds = Vec::with_capacity(config.n_trees);
    for rng in children {
        trees.push(grow_member(&columns, train.targets(), &params, config.bootstrap, rng)?);
        seconds.push(start.elapsed().as_secs_f64());
    }
    Ok((
        ForestModel {
            trees,
            config: *config,
            n_features: train.n_features(),
        },
        seconds,
    ))
}
