//! Regression trees: structure, prediction, and growth with a pluggable
//! split strategy.

mod builder;
mod split;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::SeededRng;

pub use builder::{build_tree_on, TreeParams};
pub use split::{
    best_deterministic_split, deterministic_split, extremely_randomized_split,
    extremely_randomized_split_over, partially_randomized_split, partially_randomized_split_over,
    variance_reduction, NodeData, SplitCandidate, SplitRule, SplitStats, SplitterKind,
};

/// A tree node. Serialized as `{feature, threshold, left, right}` or `{value}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode {
    Internal {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        value: f64,
    },
}

impl TreeNode {
    pub fn split(rule: SplitRule, left: TreeNode, right: TreeNode) -> Self {
        TreeNode::Internal {
            feature: rule.feature,
            threshold: rule.threshold,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn leaf(value: f64) -> Self {
        TreeNode::Leaf { value }
    }

    pub fn rule(&self) -> Option<SplitRule> {
        match *self {
            TreeNode::Internal {
                feature, threshold, ..
            } => Some(SplitRule { feature, threshold }),
            TreeNode::Leaf { .. } => None,
        }
    }

    fn count_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { left, right, .. } => left.count_leaves() + right.count_leaves(),
        }
    }

    fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    fn check(&self, n_features: usize) -> Result<()> {
        match self {
            TreeNode::Leaf { value } if !value.is_finite() => {
                Err(Error::Format("non-finite leaf value".into()))
            }
            TreeNode::Leaf { .. } => Ok(()),
            TreeNode::Internal {
                feature,
                threshold,
                left,
                right,
            } => {
                if *feature >= n_features {
                    return Err(Error::Format(format!(
                        "split on feature {feature} but tree has {n_features} features"
                    )));
                }
                if !threshold.is_finite() {
                    return Err(Error::Format("non-finite threshold".into()));
                }
                left.check(n_features)?;
                right.check(n_features)
            }
        }
    }
}

/// One leaf's region as the conjunction of the rules on its path.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafRegion {
    /// `(rule, true)` means the path took the left branch (`x_j <= t`).
    pub conditions: Vec<(SplitRule, bool)>,
    pub value: f64,
}

impl LeafRegion {
    /// Product of the path indicators.
    pub fn indicator(&self, x: &[f64]) -> f64 {
        self.conditions
            .iter()
            .map(|(rule, left)| {
                let holds = if *left {
                    x[rule.feature] <= rule.threshold
                } else {
                    x[rule.feature] > rule.threshold
                };
                if holds {
                    1.0
                } else {
                    0.0
                }
            })
            .product()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub max_depth: usize,
    pub n_leaves: usize,
    pub n_features: usize,
    pub root: TreeNode,
}

impl Tree {
    pub fn new(root: TreeNode, max_depth: usize, n_features: usize) -> Result<Self> {
        let tree = Tree {
            n_leaves: root.count_leaves(),
            max_depth,
            n_features,
            root,
        };
        tree.validate()?;
        Ok(tree)
    }

    /// Structural checks for trees read from disk.
    pub fn validate(&self) -> Result<()> {
        self.root.check(self.n_features)?;
        if self.root.count_leaves() != self.n_leaves {
            return Err(Error::Format(format!(
                "tree claims {} leaves but has {}",
                self.n_leaves,
                self.root.count_leaves()
            )));
        }
        if self.root.depth() > self.max_depth {
            return Err(Error::Format(format!(
                "tree depth {} exceeds max_depth {}",
                self.root.depth(),
                self.max_depth
            )));
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// Descends without checking the length of `x`.
    #[inline]
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
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

    /// Leaves in left-to-right order with their path conditions.
    pub fn leaves(&self) -> Vec<LeafRegion> {
        fn walk(node: &TreeNode, path: &mut Vec<(SplitRule, bool)>, out: &mut Vec<LeafRegion>) {
            match node {
                TreeNode::Leaf { value } => out.push(LeafRegion {
                    conditions: path.clone(),
                    value: *value,
                }),
                TreeNode::Internal { left, right, .. } => {
                    let rule = node.rule().unwrap();
                    path.push((rule, true));
                    walk(left, path, out);
                    path.last_mut().unwrap().1 = false;
                    walk(right, path, out);
                    path.pop();
                }
            }
        }
        let mut out = Vec::with_capacity(self.n_leaves);
        walk(&self.root, &mut Vec::new(), &mut out);
        out
    }
}

/// Grows a tree on the whole dataset.
pub fn build_tree(d: &Dataset, params: &TreeParams, rng: &mut SeededRng) -> Result<Tree> {
    let columns = d.columns();
    let indices: Vec<usize> = (0..d.n_samples()).collect();
    let (tree, _) = build_tree_on(
        NodeData::new(&columns, d.targets(), &indices),
        params,
        rng,
        None,
    )?;
    Ok(tree)
}

/// [`build_tree`] that also reports split-finding work.
pub fn build_tree_with_stats(
    d: &Dataset,
    params: &TreeParams,
    rng: &mut SeededRng,
) -> Result<(Tree, SplitStats)> {
    let columns = d.columns();
    let indices: Vec<usize> = (0..d.n_samples()).collect();
    build_tree_on(
        NodeData::new(&columns, d.targets(), &indices),
        params,
        rng,
        None,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stump() -> Tree {
        Tree::new(
            TreeNode::split(
                SplitRule {
                    feature: 0,
                    threshold: 0.5,
                },
                TreeNode::leaf(0.0),
                TreeNode::leaf(1.0),
            ),
            1,
            2,
        )
        .unwrap()
    }

    #[test]
    fn leaf_predicts_constant() {
        let t = Tree::new(TreeNode::leaf(3.5), 1, 1).unwrap();
        for x in [-1e9, 0.0, 42.0] {
            assert_eq!(t.predict(&[x]).unwrap(), 3.5);
        }
    }

    #[test]
    fn boundary_goes_left() {
        let t = stump();
        assert_eq!(t.predict(&[0.5, 9.0]).unwrap(), 0.0);
        assert_eq!(t.predict(&[0.5000001, 9.0]).unwrap(), 1.0);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            stump().predict(&[0.1]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn serialized_shape() {
        let json = serde_json::to_string(&stump().root).unwrap();
        assert_eq!(
            json,
            r#"{"feature":0,"threshold":0.5,"left":{"value":0.0},"right":{"value":1.0}}"#
        );
        let back: TreeNode = serde_json::from_str(&json).unwrap();
        assert_eq!(back, stump().root);
    }

    #[test]
    fn validation_catches_bad_trees() {
        let deep = TreeNode::split(
            SplitRule { feature: 0, threshold: 0.0 },
            TreeNode::split(SplitRule { feature: 0, threshold: -1.0 }, TreeNode::leaf(0.0), TreeNode::leaf(1.0)),
            TreeNode::leaf(2.0),
        );
        assert!(Tree::new(deep.clone(), 1, 1).is_err());
        assert!(Tree::new(deep, 2, 1).is_ok());
        let bad_feature = TreeNode::split(SplitRule { feature: 3, threshold: 0.0 }, TreeNode::leaf(0.0), TreeNode::leaf(1.0));
        assert!(Tree::new(bad_feature, 1, 2).is_err());
        let mut t = stump();
        t.n_leaves = 5;
        assert!(t.validate().is_err());
    }

    #[test]
    fn leaves_of_stump() {
        let leaves = stump().leaves();
        assert_eq!(leaves.len(), 2);
        assert_eq!(leaves[0].conditions.len(), 1);
        assert!(leaves[0].conditions[0].1);
        assert!(!leaves[1].conditions[0].1);
        assert_eq!(leaves[1].indicator(&[0.7, 0.0]), 1.0);
        assert_eq!(leaves[0].indicator(&[0.7, 0.0]), 0.0);
    }
}
