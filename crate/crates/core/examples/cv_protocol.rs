//! Repeated random 3/4 : 1/4 splits with grid search, printed as the
//! summary and per-repeat CSVs.
//!
//! cargo run --release --example cv_protocol [repeats]

use prgbm::eval::{write_repeats_csv, write_summary_csv};
use prgbm::*;

fn main() -> prgbm::Result<()> {
    let repeats: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let plan = BenchmarkPlan {
        datasets: vec![
            DatasetSource::synthetic("friedman1", 100)?,
            DatasetSource::synthetic("sparse", 100)?,
        ],
        models: ["gbm", "prgbm", "rf", "ert"]
            .iter()
            .map(|m| m.parse())
            .collect::<prgbm::Result<_>>()?,
        grid: HyperGrid::quick(),
        repeats,
        seed: 0,
        selection: SelectionMode::Paper,
    };
    let rows = run_benchmark(&plan, |dataset, r| {
        eprintln!("{dataset} {}: {:.4} +- {:.4} [{}]", r.model_name, r.mean_mse, r.std_mse, r.chosen_hyperparams[0]);
    })?;
    let names: Vec<String> = plan.models.iter().map(|m| m.name()).collect();
    let stdout = std::io::stdout();
    write_summary_csv(&rows, &names, stdout.lock())?;
    println!();
    write_repeats_csv(&rows[..1], stdout.lock())?;
    Ok(())
}
