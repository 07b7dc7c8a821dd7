//! The cut-cross image: fit GBMs with each splitter on the pixels outside
//! a plus-shaped hole and compare errors inside it. Writes PGM images.
//!
//! cargo run --release --example cross_filling [seed] [out_dir]

use std::path::PathBuf;

use prgbm::figures::{fig5, write_fig5, Fig5Config};

fn main() -> prgbm::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "cross-out".into()));
    let config = Fig5Config::default();
    let out = fig5(seed, &config)?;
    println!(
        "train points {}  depth {}  stages {}",
        out.data.train.n_samples(),
        config.max_depth,
        config.n_stages
    );
    for m in &out.models {
        println!("{:<7} cross mse {:.5}  ({:.1} s)", m.name, m.cross_mse, m.fit_seconds);
    }
    for p in write_fig5(&out, seed, &config, &dir)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}
