//! 1D data with holes: deterministic midpoint splits leave one step in each
//! hole, random thresholds fill it with a staircase.
//!
//! cargo run --release --example gap_smoothing [seed]

use prgbm::figures::{fig3, Fig3Config};

fn main() -> prgbm::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let config = Fig3Config::default();
    let out = fig3(seed, &config)?;
    println!(
        "n={} depth={} chosen stages={} learning rate={}",
        config.n, config.max_depth, out.n_stages, out.learning_rate
    );
    println!("{:<14} {:>10} {:>7} {:>10} {:>7}", "gap", "gbm jump", "levels", "prgbm jump", "levels");
    for (d, p) in out.deterministic_gaps.iter().zip(&out.partially_randomized_gaps) {
        println!(
            "({:.2}, {:.2})   {:>10.4} {:>7} {:>10.4} {:>7}",
            d.gap.0, d.gap.1, d.max_jump, d.levels, p.max_jump, p.levels
        );
    }
    Ok(())
}
