//! Synthetic datasets, CSV round trip and a train/test split.
//!
//! cargo run --example generate_data

use prgbm::dataset::{read_csv, write_csv};
use prgbm::*;

fn main() -> prgbm::Result<()> {
    let mut rng = SeededRng::new(42);
    let sets = [
        ("friedman1", make_friedman(Friedman::One, 100, &mut rng, 1.0)?),
        ("friedman2", make_friedman(Friedman::Two, 100, &mut rng, 0.0)?),
        ("friedman3", make_friedman(Friedman::Three, 100, &mut rng, 0.0)?),
        ("sparse", make_sparse_uncorrelated(100, &mut rng, 1.0)?),
        ("regression", make_linear_regression(100, 100, &mut rng, 0.0)?),
        ("one-dim", make_one_dim_dataset(100, &mut rng, 0.0, &[(0.45, 0.55)])?),
    ];
    for (name, d) in &sets {
        let y = d.targets();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        println!("{name:<11} n={:<4} m={:<4} mean(y)={mean:.4}", d.n_samples(), d.n_features());
    }

    let cross = make_two_dim_cross_dataset(&GridSpec::unit_image(), &CrossSpec::default(), &mut rng)?;
    let cut = cross.mask.iter().filter(|&&m| m).count();
    println!(
        "cross      grid={} cut={} train={}",
        cross.full_grid.n_samples(),
        cut,
        cross.train.n_samples()
    );

    // CSV round trip is exact
    let d = &sets[0].1;
    let mut buf = Vec::new();
    write_csv(d, &mut buf)?;
    let back = read_csv(buf.as_slice(), "y")?;
    assert_eq!(&back, d);
    println!("csv round trip: {} bytes, identical", buf.len());

    let split = split_train_test(d, &mut rng)?;
    println!("split: train {} / test {}", split.train.n_samples(), split.test.n_samples());
    Ok(())
}
