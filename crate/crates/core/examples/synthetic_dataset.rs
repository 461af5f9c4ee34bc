//! Generates a small synthetic dataset, writes it as grid files and prints
//! per-channel normalisation statistics.
//!
//!     cargo run --release --example synthetic_dataset -- /tmp/cvc-data

use cvc::data::{compute_stats, generate, read_split, Split, SyntheticSpec};

fn main() -> cvc::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .unwrap_or_else(|| std::env::temp_dir().join("cvc-synthetic-data").display().to_string());
    let mut spec = SyntheticSpec::desk(8, 32, 64, 42);
    spec.train = 16;
    spec.val = 4;
    spec.test = 4;
    let ds = generate(&spec)?;
    ds.write(&dir)?;

    let train = read_split(&dir, Split::Train)?;
    let stats = compute_stats(&train)?;
    println!("{} train instances of {:?} in {dir}", train.len(), train[0].dims());
    println!("{:<6} {:>12} {:>10}", "name", "mean", "std");
    for (i, name) in stats.channels.iter().enumerate() {
        println!("{name:<6} {:>12.3} {:>10.3}", stats.mean[i], stats.std[i]);
    }
    stats.save(std::path::Path::new(&dir).join("stats.toml"))?;
    println!("stats hash {}", stats.hash_hex());
    Ok(())
}
