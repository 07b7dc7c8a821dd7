//! Variance-reduction scoring and the three split strategies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// `x[feature] <= threshold` goes left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRule {
    pub feature: usize,
    pub threshold: f64,
}

impl SplitRule {
    #[inline]
    pub fn goes_left(&self, x: &[f64]) -> bool {
        x[self.feature] <= self.threshold
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub rule: SplitRule,
    /// Variance reduction, in squared target units.
    pub score: f64,
    pub n_left: usize,
    pub n_right: usize,
}

/// How a node chooses its split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitterKind {
    /// Exhaustive search over midpoints between consecutive distinct values.
    Deterministic,
    /// Best of `k` random (feature, threshold) draws.
    ExtremelyRandomized { k: usize },
    /// One random threshold per feature, best feature wins.
    PartiallyRandomized,
}

impl SplitterKind {
    pub fn validate(&self) -> Result<()> {
        match self {
            SplitterKind::ExtremelyRandomized { k: 0 } => Err(Error::InvalidArgument(
                "extremely randomized splitter needs K >= 1".into(),
            )),
            _ => Ok(()),
        }
    }
}

impl std::fmt::Display for SplitterKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SplitterKind::Deterministic => write!(f, "deterministic"),
            SplitterKind::ExtremelyRandomized { k } => write!(f, "extremely_randomized:{k}"),
            SplitterKind::PartiallyRandomized => write!(f, "partially_randomized"),
        }
    }
}

impl std::str::FromStr for SplitterKind {
    type Err = Error;

    /// Accepts `deterministic`, `partially_randomized` (or `pr`),
    /// `extremely_randomized[:K]` (or `ert[:K]`, K defaults to 1).
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (s, None),
        };
        let kind = match (name, arg) {
            ("deterministic" | "det", None) => SplitterKind::Deterministic,
            ("partially_randomized" | "pr", None) => SplitterKind::PartiallyRandomized,
            ("extremely_randomized" | "ert", k) => SplitterKind::ExtremelyRandomized {
                k: match k {
                    None => 1,
                    Some(k) => k
                        .parse()
                        .map_err(|_| Error::InvalidArgument(format!("bad K in splitter {s:?}")))?,
                },
            },
            _ => return Err(Error::InvalidArgument(format!("unknown splitter {s:?}"))),
        };
        kind.validate()?;
        Ok(kind)
    }
}

/// Counters for split-finding work.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SplitStats {
    /// Candidate partitions scored.
    pub evaluations: u64,
    /// Per-node feature sorts performed.
    pub sorts: u64,
    /// Nodes on which a splitter was invoked.
    pub nodes: u64,
}

/// The examples at one node: column-major features, targets, and the row
/// indices that reached the node (duplicates allowed, e.g. bootstrap).
#[derive(Debug, Clone, Copy)]
pub struct NodeData<'a> {
    pub columns: &'a [Vec<f64>],
    pub targets: &'a [f64],
    pub indices: &'a [usize],
}

impl<'a> NodeData<'a> {
    pub fn new(columns: &'a [Vec<f64>], targets: &'a [f64], indices: &'a [usize]) -> Self {
        NodeData {
            columns,
            targets,
            indices,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    fn target_sum(&self) -> f64 {
        self.indices.iter().map(|&i| self.targets[i]).sum()
    }

    fn feature_range(&self, j: usize) -> (f64, f64) {
        let col = &self.columns[j];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &i in self.indices {
            let v = col[i];
            lo = if v < lo { v } else { lo };
            hi = if v > hi { v } else { hi };
        }
        (lo, hi)
    }

    /// `(sum, count)` of targets going left under `rule`.
    fn left_sums(&self, rule: &SplitRule) -> (f64, usize) {
        let col = &self.columns[rule.feature];
        let mut sum = 0.0;
        let mut count = 0;
        for &i in self.indices {
            let go = col[i] <= rule.threshold;
            sum += if go { self.targets[i] } else { 0.0 };
            count += go as usize;
        }
        (sum, count)
    }
}

fn population_variance(values: &[f64]) -> f64 {
    // the mean of equal values can be off by an ulp
    if values.iter().all(|&v| v == values[0]) {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

/// `Var(all) - (n_L/n) Var(left) - (n_R/n) Var(right)` with population
/// variances, clamped at zero. `left` and `right` index into `targets`.
pub fn variance_reduction(targets: &[f64], left: &[usize], right: &[usize]) -> Result<f64> {
    if left.is_empty() || right.is_empty() {
        return Err(Error::InvalidArgument(
            "variance reduction needs two nonempty sides".into(),
        ));
    }
    let l: Vec<f64> = left.iter().map(|&i| targets[i]).collect();
    let r: Vec<f64> = right.iter().map(|&i| targets[i]).collect();
    let all: Vec<f64> = l.iter().chain(&r).copied().collect();
    let n = all.len() as f64;
    let vr = population_variance(&all)
        - (l.len() as f64 / n) * population_variance(&l)
        - (r.len() as f64 / n) * population_variance(&r);
    Ok(vr.max(0.0))
}

/// Score from side sums; algebraically equal to [`variance_reduction`].
#[inline]
fn score_from_sums(sum_left: f64, n_left: usize, sum_total: f64, n: usize) -> f64 {
    let n_right = n - n_left;
    let sum_right = sum_total - sum_left;
    let between = sum_left * sum_left / n_left as f64 + sum_right * sum_right / n_right as f64
        - sum_total * sum_total / n as f64;
    between / n as f64
}

/// Two-pass variance reduction of `rule` on the node, without allocating.
fn exact_score(node: &NodeData<'_>, rule: &SplitRule) -> f64 {
    let col = &node.columns[rule.feature];
    let (mut sl, mut nl, mut sr, mut nr) = (0.0, 0usize, 0.0, 0usize);
    for &i in node.indices {
        if col[i] <= rule.threshold {
            sl += node.targets[i];
            nl += 1;
        } else {
            sr += node.targets[i];
            nr += 1;
        }
    }
    let n = (nl + nr) as f64;
    let (ml, mr, m) = (sl / nl as f64, sr / nr as f64, (sl + sr) / n);
    let (mut ss, mut ssl, mut ssr) = (0.0, 0.0, 0.0);
    for &i in node.indices {
        let y = node.targets[i];
        ss += (y - m) * (y - m);
        if col[i] <= rule.threshold {
            ssl += (y - ml) * (y - ml);
        } else {
            ssr += (y - mr) * (y - mr);
        }
    }
    ((ss - ssl - ssr) / n).max(0.0)
}

fn finish(node: &NodeData<'_>, rule: SplitRule, n_left: usize) -> SplitCandidate {
    SplitCandidate {
        rule,
        score: exact_score(node, &rule),
        n_left,
        n_right: node.len() - n_left,
    }
}

/// Maps `x` to an integer whose unsigned order is `f64::total_cmp` order.
#[inline]
fn sort_key(x: f64) -> u64 {
    let b = x.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

#[inline]
fn from_sort_key(k: u64) -> f64 {
    f64::from_bits(if k >> 63 == 1 { k & !(1 << 63) } else { !k })
}

/// Best midpoint split on one feature, using a caller-provided sort buffer.
/// Returns the fast score alongside so callers can compare across features.
fn deterministic_on_feature(
    node: &NodeData<'_>,
    feature: usize,
    sum_total: f64,
    buf: &mut Vec<(u64, f64)>,
    stats: &mut SplitStats,
) -> Option<(SplitRule, usize, f64)> {
    let n = node.len();
    if n < 2 {
        return None;
    }
    let col = &node.columns[feature];
    buf.clear();
    buf.extend(node.indices.iter().map(|&i| (sort_key(col[i]), node.targets[i])));
    buf.sort_unstable_by_key(|p| p.0);
    stats.sorts += 1;

    let mut best: Option<(usize, f64)> = None;
    let mut sum_left = 0.0;
    let mut x_next = from_sort_key(buf[0].0);
    for k in 0..n - 1 {
        sum_left += buf[k].1;
        let x = x_next;
        x_next = from_sort_key(buf[k + 1].0);
        if x < x_next {
            stats.evaluations += 1;
            let s = score_from_sums(sum_left, k + 1, sum_total, n);
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((k, s));
            }
        }
    }
    let (k, s) = best?;
    let (a, b) = (from_sort_key(buf[k].0), from_sort_key(buf[k + 1].0));
    let mut threshold = a + (b - a) / 2.0;
    if threshold >= b {
        threshold = a;
    }
    Some((SplitRule { feature, threshold }, k + 1, s))
}

/// Best midpoint split on a single feature; `None` if the feature is
/// constant on the node.
pub fn best_deterministic_split(
    node: &NodeData<'_>,
    feature: usize,
    stats: &mut SplitStats,
) -> Option<SplitCandidate> {
    let mut buf = Vec::with_capacity(node.len());
    let total = node.target_sum();
    deterministic_on_feature(node, feature, total, &mut buf, stats)
        .map(|(rule, n_left, _)| finish(node, rule, n_left))
}

/// Best midpoint split over `features`; ties keep the earliest feature.
pub fn deterministic_split(
    node: &NodeData<'_>,
    features: &[usize],
    buf: &mut Vec<(u64, f64)>,
    stats: &mut SplitStats,
) -> Option<SplitCandidate> {
    stats.nodes += 1;
    let total = node.target_sum();
    let mut best: Option<(SplitRule, usize, f64)> = None;
    for &j in features {
        if let Some(c) = deterministic_on_feature(node, j, total, buf, stats) {
            if best.is_none_or(|b| c.2 > b.2) {
                best = Some(c);
            }
        }
    }
    best.map(|(rule, n_left, _)| finish(node, rule, n_left))
}

/// Draws a threshold in `[lo, hi)` and scores it; one redraw if a side
/// comes out empty, then gives up on the feature.
fn random_threshold_on_feature(
    node: &NodeData<'_>,
    feature: usize,
    lo: f64,
    hi: f64,
    sum_total: f64,
    rng: &mut SeededRng,
    stats: &mut SplitStats,
) -> Option<(SplitRule, usize, f64)> {
    let n = node.len();
    for _ in 0..2 {
        let rule = SplitRule {
            feature,
            threshold: rng.uniform_unchecked(lo, hi),
        };
        stats.evaluations += 1;
        let (sum_left, n_left) = node.left_sums(&rule);
        if n_left > 0 && n_left < n {
            return Some((rule, n_left, score_from_sums(sum_left, n_left, sum_total, n)));
        }
    }
    None
}

/// One uniform threshold per non-constant feature in `features`, drawn in
/// feature order; the highest-scoring feature wins (ties: earliest).
pub fn partially_randomized_split_over(
    node: &NodeData<'_>,
    features: &[usize],
    rng: &mut SeededRng,
    stats: &mut SplitStats,
) -> Option<SplitCandidate> {
    stats.nodes += 1;
    if node.len() < 2 {
        return None;
    }
    let total = node.target_sum();
    let mut best: Option<(SplitRule, usize, f64)> = None;
    for &j in features {
        let (lo, hi) = node.feature_range(j);
        if lo >= hi {
            continue;
        }
        if let Some(c) = random_threshold_on_feature(node, j, lo, hi, total, rng, stats) {
            if best.is_none_or(|b| c.2 > b.2) {
                best = Some(c);
            }
        }
    }
    best.map(|(rule, n_left, _)| finish(node, rule, n_left))
}

/// Partially randomized split over all features.
pub fn partially_randomized_split(
    node: &NodeData<'_>,
    rng: &mut SeededRng,
    stats: &mut SplitStats,
) -> Option<SplitCandidate> {
    let features: Vec<usize> = (0..node.n_features()).collect();
    partially_randomized_split_over(node, &features, rng, stats)
}

/// `k` draws of (uniform non-constant feature, uniform threshold), with
/// replacement over features; the best draw wins (ties: earliest draw).
pub fn extremely_randomized_split_over(
    node: &NodeData<'_>,
    features: &[usize],
    k: usize,
    rng: &mut SeededRng,
    stats: &mut SplitStats,
) -> Option<SplitCandidate> {
    stats.nodes += 1;
    if node.len() < 2 {
        return None;
    }
    let ranges: Vec<(usize, f64, f64)> = features
        .iter()
        .map(|&j| {
            let (lo, hi) = node.feature_range(j);
            (j, lo, hi)
        })
        .filter(|&(_, lo, hi)| lo < hi)
        .collect();
    if ranges.is_empty() {
        return None;
    }
    let total = node.target_sum();
    let mut best: Option<(SplitRule, usize, f64)> = None;
    for _ in 0..k {
        let (j, lo, hi) = ranges[rng.index(ranges.len())];
        if let Some(c) = random_threshold_on_feature(node, j, lo, hi, total, rng, stats) {
            if best.is_none_or(|b| c.2 > b.2) {
                best = Some(c);
            }
        }
    }
    best.map(|(rule, n_left, _)| finish(node, rule, n_left))
}

pub fn extremely_randomized_split(
    node: &NodeData<'_>,
    k: usize,
    rng: &mut SeededRng,
    stats: &mut SplitStats,
) -> Option<SplitCandidate> {
    let features: Vec<usize> = (0..node.n_features()).collect();
    extremely_randomized_split_over(node, &features, k, rng, stats)
}
