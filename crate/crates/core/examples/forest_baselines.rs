//! Random forest and extra-trees baselines next to the two GBMs on
//! Friedman 2.
//!
//! cargo run --release --example forest_baselines

use prgbm::*;

fn main() -> prgbm::Result<()> {
    let mut rng = SeededRng::new(5);
    let d = make_friedman(Friedman::Two, 200, &mut rng, 0.0)?;
    let split = split_train_test(&d, &mut rng)?;
    let score = |name: &str, preds: Vec<f64>| -> prgbm::Result<()> {
        println!("{name:<14} test mse {:>10.2}", mse(&preds, split.test.targets())?);
        Ok(())
    };

    let rf = fit_forest(
        &split.train,
        &ForestConfig {
            n_trees: 300,
            seed: 1,
            ..ForestConfig::random_forest(d.n_features())
        },
    )?;
    score("random forest", rf.predict_dataset(&split.test)?)?;
    let ert = fit_forest(
        &split.train,
        &ForestConfig {
            n_trees: 300,
            seed: 1,
            ..ForestConfig::extra_trees()
        },
    )?;
    score("extra trees", ert.predict_dataset(&split.test)?)?;

    for splitter in [SplitterKind::Deterministic, SplitterKind::PartiallyRandomized] {
        let gbm = fit_gbm(
            &split.train,
            &GbmConfig {
                n_stages: 800,
                learning_rate: 0.05,
                max_depth: 2,
                splitter,
                seed: 1,
                ..GbmConfig::default()
            },
        )?;
        score(&format!("gbm {splitter}"), gbm.predict_dataset(&split.test)?)?;
    }
    Ok(())
}
