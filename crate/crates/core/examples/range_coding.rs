//! Range-codes Gaussian-distributed symbols with per-symbol tables and
//! compares the stream length to the ideal code length.

use cvc::entropy::{range_decode, range_encode, CdfCache};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut cache = CdfCache::new(-128, 127);
    let n = 50_000;
    let params: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen_range(-20.0..20.0), rng.gen_range(0.2..8.0))).collect();
    let symbols: Vec<i32> = params
        .iter()
        .map(|&(m, s)| Normal::new(m, s).unwrap().sample(&mut rng).round() as i32)
        .collect();
    let tables: Vec<_> = params.iter().map(|&(m, s)| cache.get(m, s)).collect();

    let bytes = range_encode(&symbols, |i| &*tables[i]).expect("symbols fit the alphabet");
    let decoded = range_decode(&bytes, n, |i| &*tables[i]).expect("stream decodes");
    assert_eq!(decoded, symbols);

    let ideal: f64 = tables.iter().zip(&symbols).map(|(t, &s)| t.bits(s)).sum();
    println!("{n} symbols, {} distinct tables", cache.len());
    println!("ideal {:.1} bits, stream {} bits ({:+.1})", ideal, bytes.len() * 8, bytes.len() as f64 * 8.0 - ideal);
    println!("{:.3} bits/symbol", bytes.len() as f64 * 8.0 / n as f64);
}
