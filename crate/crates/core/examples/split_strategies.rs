//! The three split strategies on one dataset: chosen root split, number of
//! scored thresholds, and build time of a depth-9 tree.
//!
//! cargo run --release --example split_strategies [n]

use std::time::Instant;

use prgbm::tree::build_tree_with_stats;
use prgbm::*;

fn main() -> prgbm::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20_000);
    let d = make_linear_regression(n, 8, &mut SeededRng::new(1), 1.0)?;
    let splitters = [
        SplitterKind::Deterministic,
        SplitterKind::ExtremelyRandomized { k: 1 },
        SplitterKind::ExtremelyRandomized { k: 8 },
        SplitterKind::PartiallyRandomized,
    ];
    println!("n={n} m=8 depth=9");
    for s in splitters {
        let params = TreeParams {
            max_depth: 9,
            splitter: s,
            ..TreeParams::default()
        };
        let start = Instant::now();
        let (tree, stats) = build_tree_with_stats(&d, &params, &mut SeededRng::new(7))?;
        let secs = start.elapsed().as_secs_f64();
        let root = tree.root.rule().expect("root is split");
        let preds = tree.predict_dataset(&d)?;
        println!(
            "{s:<24} root x{} <= {:.4}  leaves {:>3}  evaluations {:>9}  sorts {:>5}  train mse {:>10.2}  {:.1} ms",
            root.feature,
            root.threshold,
            tree.n_leaves,
            stats.evaluations,
            stats.sorts,
            mse(&preds, d.targets())?,
            secs * 1e3
        );
    }
    Ok(())
}
