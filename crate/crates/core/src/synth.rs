//! Synthetic regression data.
//!
//! Friedman benchmarks (Breiman's definitions, inputs drawn uniformly):
//!
//! | which | m  | inputs                                                        | target |
//! |-------|----|---------------------------------------------------------------|--------|
//! | 1     | 10 | `x_j ~ U[0,1]` (only the first five matter)                    | `10 sin(pi x1 x2) + 20 (x3 - 0.5)^2 + 10 x4 + 5 x5` |
//! | 2     | 4  | `x1 ~ U[0,100]`, `x2 ~ U[40pi,560pi]`, `x3 ~ U[0,1]`, `x4 ~ U[1,11]` | `sqrt(x1^2 + (x2 x3 - 1/(x2 x4))^2)` |
//! | 3     | 4  | same as 2                                                     | `atan((x2 x3 - 1/(x2 x4)) / x1)` |
//!
//! Noise is `N(0, noise_sd^2)` added to the target.
//!
//! Sparse uncorrelated: ten standard normal inputs, `y = x1 + 2 x2 - 2 x3 - 1.5 x4`.
//! Linear regression: standard normal inputs; the first `min(10, m)` features
//! get weights `100 * U[0,1)` drawn once per dataset, the rest weight zero.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Piecewise test curve: `sin(5x)` up to and including 1/2, `x` above.
pub fn one_dim_function(x: f64) -> f64 {
    if x <= 0.5 {
        (5.0 * x).sin()
    } else {
        x
    }
}

pub fn two_dim_function(x: f64, y: f64) -> f64 {
    (10.0 * (x + (1.1 * y).exp())).sin()
}

/// Evenly spaced points on `[lo, hi]`, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points_per_axis: usize,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, points_per_axis: usize) -> Result<Self> {
        let g = GridSpec {
            lo,
            hi,
            points_per_axis,
        };
        g.validate()?;
        Ok(g)
    }

    /// 200 points on the unit interval.
    pub fn unit_line() -> Self {
        GridSpec {
            lo: 0.0,
            hi: 1.0,
            points_per_axis: 200,
        }
    }

    /// 100 points per axis on the unit square.
    pub fn unit_image() -> Self {
        GridSpec {
            lo: 0.0,
            hi: 1.0,
            points_per_axis: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::InvalidArgument(format!(
                "grid needs finite lo < hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        if self.points_per_axis < 2 {
            return Err(Error::InvalidArgument(
                "grid needs at least 2 points per axis".into(),
            ));
        }
        Ok(())
    }

    pub fn point(&self, i: usize) -> f64 {
        let step = (self.hi - self.lo) / (self.points_per_axis - 1) as f64;
        if i + 1 == self.points_per_axis {
            self.hi
        } else {
            self.lo + step * i as f64
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.points_per_axis).map(|i| self.point(i)).collect()
    }
}

/// A centred plus-shaped region: two axis-aligned bands through the middle
/// of the image, each `arm_width` (fraction of the side) wide.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossSpec {
    pub arm_width: f64,
}

impl Default for CrossSpec {
    fn default() -> Self {
        CrossSpec { arm_width: 0.2 }
    }
}

impl CrossSpec {
    /// Whether pixel index `i` (of `p` per axis) falls in a band.
    fn in_band(&self, i: usize, p: usize) -> bool {
        let centre = (p as f64 - 1.0) / 2.0;
        (i as f64 - centre).abs() < self.arm_width * p as f64 / 2.0
    }

    /// Mask over the grid in image order (`y` outer, `x` inner).
    pub fn mask(&self, grid: &GridSpec) -> Vec<bool> {
        let p = grid.points_per_axis;
        let mut out = Vec::with_capacity(p * p);
        for iy in 0..p {
            for ix in 0..p {
                out.push(self.in_band(ix, p) || self.in_band(iy, p));
            }
        }
        out
    }
}

/// Result of [`make_two_dim_cross_dataset`].
#[derive(Debug, Clone)]
pub struct CrossData {
    pub train: Dataset,
    pub full_grid: Dataset,
    /// `true` for grid points inside the cut-out cross, aligned with `full_grid`.
    pub mask: Vec<bool>,
}

/// Every grid point of `two_dim_function` (`y` outer, `x` inner), and a
/// training set made of a uniformly chosen half of the points outside the
/// cross.
pub fn make_two_dim_cross_dataset(
    grid: &GridSpec,
    cross: &CrossSpec,
    rng: &mut SeededRng,
) -> Result<CrossData> {
    grid.validate()?;
    if !(cross.arm_width > 0.0 && cross.arm_width < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "cross arm width must lie in (0, 1), got {}",
            cross.arm_width
        )));
    }
    let axis = grid.points();
    let p = grid.points_per_axis;
    let mut features = Vec::with_capacity(2 * p * p);
    let mut targets = Vec::with_capacity(p * p);
    for &y in &axis {
        for &x in &axis {
            features.extend_from_slice(&[x, y]);
            targets.push(two_dim_function(x, y));
        }
    }
    let full_grid = Dataset::from_flat(features, 2, targets)?
        .with_feature_names(vec!["x".into(), "y".into()])?;
    let mask = cross.mask(grid);

    let mut outside: Vec<usize> = (0..p * p).filter(|&i| !mask[i]).collect();
    outside.shuffle(rng);
    let keep = outside.len() / 2;
    let mut kept = outside[..keep].to_vec();
    kept.sort_unstable();
    if kept.is_empty() {
        return Err(Error::InvalidArgument(
            "cross leaves no training points".into(),
        ));
    }
    Ok(CrossData {
        train: full_grid.subset(&kept),
        full_grid,
        mask,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Friedman {
    One,
    Two,
    Three,
}

impl Friedman {
    pub fn n_features(self) -> usize {
        match self {
            Friedman::One => 10,
            Friedman::Two | Friedman::Three => 4,
        }
    }

    /// Noise-free target.
    pub fn target(self, x: &[f64]) -> f64 {
        match self {
            Friedman::One => {
                10.0 * (PI * x[0] * x[1]).sin()
                    + 20.0 * (x[2] - 0.5).powi(2)
                    + 10.0 * x[3]
                    + 5.0 * x[4]
            }
            Friedman::Two => {
                let inner = x[1] * x[2] - 1.0 / (x[1] * x[3]);
                (x[0] * x[0] + inner * inner).sqrt()
            }
            Friedman::Three => ((x[1] * x[2] - 1.0 / (x[1] * x[3])) / x[0]).atan(),
        }
    }

    fn input_ranges(self) -> &'static [(f64, f64)] {
        const TWO: [(f64, f64); 4] = [
            (0.0, 100.0),
            (40.0 * PI, 560.0 * PI),
            (0.0, 1.0),
            (1.0, 11.0),
        ];
        match self {
            Friedman::One => &[(0.0, 1.0); 10],
            Friedman::Two | Friedman::Three => &TWO,
        }
    }
}

impl TryFrom<u8> for Friedman {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Friedman::One),
            2 => Ok(Friedman::Two),
            3 => Ok(Friedman::Three),
            _ => Err(Error::InvalidArgument(format!("no Friedman problem {v}"))),
        }
    }
}

fn noise(noise_sd: f64) -> Result<Normal<f64>> {
    Normal::new(0.0, noise_sd)
        .map_err(|_| Error::InvalidArgument(format!("noise_sd must be >= 0, got {noise_sd}")))
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    Ok(())
}

pub fn make_friedman(which: Friedman, n: usize, rng: &mut SeededRng, noise_sd: f64) -> Result<Dataset> {
    check_n(n)?;
    let eps = noise(noise_sd)?;
    let ranges = which.input_ranges();
    let m = ranges.len();
    let mut features = Vec::with_capacity(n * m);
    let mut targets = Vec::with_capacity(n);
    for _ in 0..n {
        let start = features.len();
        for &(lo, hi) in ranges {
            features.push(rng.uniform_unchecked(lo, hi));
        }
        let y = which.target(&features[start..]);
        targets.push(y + eps.sample(rng));
    }
    Dataset::from_flat(features, m, targets)
}

pub fn make_sparse_uncorrelated(n: usize, rng: &mut SeededRng, noise_sd: f64) -> Result<Dataset> {
    check_n(n)?;
    let eps = noise(noise_sd)?;
    let m = 10;
    let mut features = Vec::with_capacity(n * m);
    let mut targets = Vec::with_capacity(n);
    for _ in 0..n {
        let x: Vec<f64> = (0..m).map(|_| StandardNormal.sample(rng)).collect();
        targets.push(x[0] + 2.0 * x[1] - 2.0 * x[2] - 1.5 * x[3] + eps.sample(rng));
        features.extend(x);
    }
    Dataset::from_flat(features, m, targets)
}

pub fn make_linear_regression(n: usize, m: usize, rng: &mut SeededRng, noise_sd: f64) -> Result<Dataset> {
    check_n(n)?;
    if m == 0 {
        return Err(Error::InvalidArgument("need at least one feature".into()));
    }
    let eps = noise(noise_sd)?;
    let informative = m.min(10);
    let weights: Vec<f64> = (0..m)
        .map(|j| {
            if j < informative {
                100.0 * rng.uniform_unchecked(0.0, 1.0)
            } else {
                0.0
            }
        })
        .collect();
    let mut features = Vec::with_capacity(n * m);
    let mut targets = Vec::with_capacity(n);
    for _ in 0..n {
        let x: Vec<f64> = (0..m).map(|_| StandardNormal.sample(rng)).collect();
        let y: f64 = x.iter().zip(&weights).map(|(a, w)| a * w).sum();
        targets.push(y + eps.sample(rng));
        features.extend(x);
    }
    Dataset::from_flat(features, m, targets)
}

/// Uniform inputs on `[0, 1]` with the open intervals in `gaps` left empty,
/// targets from [`one_dim_function`] plus noise.
pub fn make_one_dim_dataset(
    n: usize,
    rng: &mut SeededRng,
    noise_sd: f64,
    gaps: &[(f64, f64)],
) -> Result<Dataset> {
    check_n(n)?;
    let eps = noise(noise_sd)?;
    let mut sorted = gaps.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    for &(lo, hi) in &sorted {
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "gap ({lo}, {hi}) is not a sub-interval of [0, 1]"
            )));
        }
    }
    if sorted.windows(2).any(|w| w[1].0 < w[0].1) {
        return Err(Error::InvalidArgument("gaps overlap".into()));
    }
    let covered: f64 = sorted.iter().map(|(lo, hi)| hi - lo).sum();
    if covered >= 1.0 {
        return Err(Error::InvalidArgument("gaps cover all of [0, 1]".into()));
    }
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    while xs.len() < n {
        let x = rng.uniform_unchecked(0.0, 1.0);
        if sorted.iter().any(|&(lo, hi)| lo < x && x < hi) {
            continue;
        }
        xs.push(x);
        ys.push(one_dim_function(x) + eps.sample(rng));
    }
    Dataset::from_flat(xs, 1, ys)?.with_feature_names(vec!["x".into()])
}
