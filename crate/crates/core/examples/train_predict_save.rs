//! Fit a partially randomized GBM, save it as JSON, load it back and
//! predict.
//!
//! cargo run --release --example train_predict_save

use prgbm::model_io::{from_json, to_json};
use prgbm::*;

fn main() -> prgbm::Result<()> {
    let mut rng = SeededRng::new(3);
    let d = make_friedman(Friedman::One, 400, &mut rng, 1.0)?;
    let split = split_train_test(&d, &mut rng)?;
    let config = GbmConfig {
        n_stages: 400,
        learning_rate: 0.05,
        max_depth: 2,
        splitter: SplitterKind::PartiallyRandomized,
        seed: 11,
        ..GbmConfig::default()
    };
    let model = fit_gbm(&split.train, &config)?;
    let test_mse = mse(&model.predict_dataset(&split.test)?, split.test.targets())?;
    println!("stages {}  init {:.4}  test mse {test_mse:.4}", model.stages.len(), model.init);

    let staged = model.staged_mse(&split.test)?;
    for m in [0, 50, 100, 200, 400] {
        println!("  after {m:>3} stages: test mse {:.4}", staged[m]);
    }

    let json = to_json(&Model::Gbm(model.clone()))?;
    println!("model json: {} bytes", json.len());
    let loaded = from_json(&json)?;
    let x = split.test.row(0);
    assert_eq!(loaded.predict(x)?.to_bits(), model.predict(x)?.to_bits());
    println!("reloaded prediction for first test row: {:.6}", loaded.predict(x)?);
    Ok(())
}
