//! Gradient boosting for regression with three interchangeable split
//! strategies for the base trees:
//!
//! * **deterministic**: CART-style exhaustive search with thresholds at
//!   midpoints between consecutive distinct feature values,
//! * **extremely randomized**: `K` random `(feature, threshold)` candidates per
//!   node, the best one kept,
//! * **partially randomized**: one uniformly drawn threshold per feature, the
//!   feature with the largest variance reduction wins.
//!
//! Alongside the boosting loop the crate ships bagged random forest and
//! extra-trees baselines, synthetic data generators, and a repeated
//! random-split evaluation harness.
//!
//! ```
//! use prgbm::{fit_gbm, make_friedman, Friedman, GbmConfig, SeededRng, SplitterKind};
//!
//! let mut rng = SeededRng::new(7);
//! let data = make_friedman(Friedman::One, 100, &mut rng, 1.0).unwrap();
//! let config = GbmConfig {
//!     n_stages: 50,
//!     max_depth: 3,
//!     splitter: SplitterKind::PartiallyRandomized,
//!     ..GbmConfig::default()
//! };
//! let model = fit_gbm(&data, &config).unwrap();
//! let y_hat = model.predict(data.row(0)).unwrap();
//! assert!(y_hat.is_finite());
//! ```

pub mod boosting;
pub mod cli;
pub mod dataset;
mod error;
pub mod eval;
pub mod figures;
pub mod forest;
pub mod model_io;
pub mod rng;
pub mod synth;
pub mod tree;

pub use boosting::{fit_gbm, line_search_gamma, GbmConfig, GbmModel, Loss, SquaredError};
pub use dataset::{load_csv, save_csv, split_train_test, Dataset, TargetColumn, TrainTestSplit};
pub use error::{Error, Result};
pub use eval::{
    gap_jump_metric, mse, run_benchmark, run_protocol, BenchmarkPlan, CvReport, DatasetSource, HyperGrid,
    ModelSpec, SelectionMode,
};
pub use forest::{fit_forest, ForestConfig, ForestModel};
pub use model_io::{load_model, save_model, Model};
pub use rng::{uniform, SeededRng};
pub use synth::{
    make_friedman, make_linear_regression, make_one_dim_dataset, make_sparse_uncorrelated,
    make_two_dim_cross_dataset, one_dim_function, two_dim_function, CrossSpec, Friedman, GridSpec,
};
pub use tree::{build_tree, SplitRule, SplitterKind, Tree, TreeNode, TreeParams};
