use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::split::{
    deterministic_split, extremely_randomized_split_over, partially_randomized_split_over,
    NodeData, SplitCandidate, SplitStats, SplitterKind,
};
use super::{Tree, TreeNode};
use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Targets whose spread is at most this are treated as constant.
const CONSTANT_TARGET_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub splitter: SplitterKind,
    /// Features drawn per node (random-forest style). `None` uses all.
    #[serde(default)]
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 5,
            min_samples_split: 2,
            splitter: SplitterKind::Deterministic,
            max_features: None,
        }
    }
}

impl TreeParams {
    pub fn validate(&self, n_features: usize) -> Result<()> {
        if self.max_depth == 0 {
            return Err(Error::InvalidArgument("max_depth must be >= 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::InvalidArgument("min_samples_split must be >= 2".into()));
        }
        if let Some(k) = self.max_features {
            if k == 0 || k > n_features {
                return Err(Error::InvalidArgument(format!(
                    "max_features must lie in 1..={n_features}, got {k}"
                )));
            }
        }
        self.splitter.validate()
    }
}

struct Grower<'a, 'r> {
    columns: &'a [Vec<f64>],
    targets: &'a [f64],
    params: &'a TreeParams,
    rng: &'r mut SeededRng,
    stats: SplitStats,
    sort_buf: Vec<(u64, f64)>,
    all_features: Vec<usize>,
    leaf_out: Option<&'r mut [f64]>,
}

impl Grower<'_, '_> {
    fn leaf(&mut self, indices: &[usize]) -> TreeNode {
        let mean = indices.iter().map(|&i| self.targets[i]).sum::<f64>() / indices.len() as f64;
        if let Some(out) = self.leaf_out.as_deref_mut() {
            for &i in indices {
                out[i] = mean;
            }
        }
        TreeNode::leaf(mean)
    }

    fn targets_constant(&self, indices: &[usize]) -> bool {
        let (lo, hi) = indices.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            let y = self.targets[i];
            (lo.min(y), hi.max(y))
        });
        hi - lo <= CONSTANT_TARGET_TOL
    }

    fn find_split(&mut self, indices: &[usize]) -> Option<SplitCandidate> {
        let sampled;
        let features: &[usize] = match self.params.max_features {
            Some(k) if k < self.all_features.len() => {
                let mut f = index::sample(self.rng, self.all_features.len(), k).into_vec();
                f.sort_unstable();
                sampled = f;
                &sampled
            }
            _ => &self.all_features,
        };
        let node = NodeData::new(self.columns, self.targets, indices);
        match self.params.splitter {
            SplitterKind::Deterministic => {
                deterministic_split(&node, features, &mut self.sort_buf, &mut self.stats)
            }
            SplitterKind::PartiallyRandomized => {
                partially_randomized_split_over(&node, features, self.rng, &mut self.stats)
            }
            SplitterKind::ExtremelyRandomized { k } => {
                extremely_randomized_split_over(&node, features, k, self.rng, &mut self.stats)
            }
        }
    }

    fn grow(&mut self, indices: &mut [usize], depth: usize) -> TreeNode {
        if depth >= self.params.max_depth
            || indices.len() < self.params.min_samples_split
            || self.targets_constant(indices)
        {
            return self.leaf(indices);
        }
        let Some(candidate) = self.find_split(indices) else {
            return self.leaf(indices);
        };
        let rule = candidate.rule;
        let col = &self.columns[rule.feature];
        let mut n_left = 0;
        for k in 0..indices.len() {
            if col[indices[k]] <= rule.threshold {
                indices.swap(k, n_left);
                n_left += 1;
            }
        }
        debug_assert_eq!(n_left, candidate.n_left);
        let (left, right) = indices.split_at_mut(n_left);
        let l = self.grow(left, depth + 1);
        let r = self.grow(right, depth + 1);
        TreeNode::split(rule, l, r)
    }
}

/// Grows a tree on the rows `node.indices` (duplicates allowed).
///
/// When `leaf_predictions` is given it must have one slot per row of
/// `node.targets`; every row reaching a leaf gets that leaf's value.
pub fn build_tree_on(
    node: NodeData<'_>,
    params: &TreeParams,
    rng: &mut SeededRng,
    leaf_predictions: Option<&mut [f64]>,
) -> Result<(Tree, SplitStats)> {
    let m = node.n_features();
    params.validate(m)?;
    if node.is_empty() {
        return Err(Error::InvalidData("cannot grow a tree on zero rows".into()));
    }
    if let Some(out) = &leaf_predictions {
        if out.len() != node.targets.len() {
            return Err(Error::InvalidArgument(
                "leaf prediction buffer must match the target length".into(),
            ));
        }
    }
    let mut grower = Grower {
        columns: node.columns,
        targets: node.targets,
        params,
        rng,
        stats: SplitStats::default(),
        sort_buf: Vec::with_capacity(node.len()),
        all_features: (0..m).collect(),
        leaf_out: leaf_predictions,
    };
    let mut indices = node.indices.to_vec();
    let root = grower.grow(&mut indices, 0);
    let stats = grower.stats;
    Ok((Tree::new(root, params.max_depth, m)?, stats))
}
