//! Integer cumulative-frequency tables derived from a Gaussian.
//!
//! The derivation is specified entirely in integer arithmetic once (μ, σ) are
//! mapped to their grids, so encoder and decoder build identical tables on any
//! platform. See FORMATS.md for the exact recipe.

use std::collections::HashMap;
use std::sync::Arc;

use super::consts::{INV_SCALE_Q16, PHI_Q32, SCALE_BOUNDS, SCALE_LEVELS};

pub const PRECISION_BITS: u32 = 16;
pub const TOTAL: u32 = 1 << PRECISION_BITS;

/// Number of σ levels on the log grid.
pub const SCALE_LEVEL_COUNT: usize = 64;

const ONE_Q32: u64 = 1 << 32;

/// Cumulative frequencies over the alphabet `[s_min, s_max]`, total 2^16,
/// every symbol at least 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantizedCdfTable {
    s_min: i32,
    /// `cum[k]` is the start of symbol `s_min + k`; `cum[n] == TOTAL`.
    cum: Vec<u32>,
}

/// μ on the 1/256 grid, clamped to the alphabet, and the σ level index.
pub fn quantize_params(mean: f64, scale: f64, s_min: i32, s_max: i32) -> (i64, usize) {
    let lo = s_min as i64 * 256;
    let hi = s_max as i64 * 256;
    let mu_q = if mean.is_nan() {
        0
    } else {
        ((mean * 256.0).round_ties_even().clamp(lo as f64, hi as f64)) as i64
    };
    let level = SCALE_BOUNDS.partition_point(|&b| b <= scale);
    (mu_q.clamp(lo, hi), level)
}

/// σ represented by a level index.
pub fn scale_level_value(level: usize) -> f64 {
    SCALE_LEVELS[level]
}

/// Φ(t)·2^32 for `t` given in units of 2^-24, by linear interpolation of a
/// table sampled every 1/128.
pub fn phi_q32(t: i64) -> u64 {
    let a = t.unsigned_abs();
    let idx = (a >> 17) as usize;
    let p = if idx >= 1024 {
        ONE_Q32
    } else {
        let frac = a & ((1 << 17) - 1);
        let (lo, hi) = (PHI_Q32[idx], PHI_Q32[idx + 1]);
        lo + (((hi - lo) * frac) >> 17)
    };
    if t < 0 {
        ONE_Q32 - p
    } else {
        p
    }
}

impl QuantizedCdfTable {
    /// Table for N(mean, scale²) convolved with the unit bin.
    pub fn from_gaussian(mean: f64, scale: f64, s_min: i32, s_max: i32) -> Self {
        let (mu_q, level) = quantize_params(mean, scale, s_min, s_max);
        Self::from_quantized(mu_q, level, s_min, s_max)
    }

    pub fn from_quantized(mu_q: i64, level: usize, s_min: i32, s_max: i32) -> Self {
        assert!(s_min < s_max, "empty alphabet");
        let n = (s_max as i64 - s_min as i64 + 1) as usize;
        assert!(n < TOTAL as usize / 2, "alphabet too large for 16-bit precision");
        let inv = INV_SCALE_Q16[level] as i64;
        // Φ at every bin edge; the outermost edges are pinned so tail mass
        // folds into the edge symbols
        let mut edges = Vec::with_capacity(n + 1);
        edges.push(0u64);
        for k in 1..n {
            let s = s_min as i64 + k as i64;
            let diff = (2 * s - 1) * 128 - mu_q;
            edges.push(phi_q32(diff * inv));
        }
        edges.push(ONE_Q32);
        let spare = TOTAL as u64 - n as u64;
        let mut freq: Vec<u32> = edges
            .windows(2)
            .map(|e| 1 + (((e[1] - e[0]) * spare) >> 32) as u32)
            .collect();
        let used: u32 = freq.iter().sum();
        let mut best = 0;
        for (k, &f) in freq.iter().enumerate() {
            if f > freq[best] {
                best = k;
            }
        }
        freq[best] += TOTAL - used;
        Self::from_frequencies(s_min, &freq).expect("derived table is valid")
    }

    /// Table from explicit frequencies; they must be ≥ 1 and sum to 2^16.
    pub fn from_frequencies(s_min: i32, freq: &[u32]) -> Option<Self> {
        if freq.is_empty() || freq.iter().any(|&f| f == 0) {
            return None;
        }
        let mut cum = Vec::with_capacity(freq.len() + 1);
        let mut acc = 0u64;
        cum.push(0);
        for &f in freq {
            acc += f as u64;
            cum.push(acc.min(u32::MAX as u64) as u32);
        }
        (acc == TOTAL as u64).then_some(Self { s_min, cum })
    }

    pub fn s_min(&self) -> i32 {
        self.s_min
    }

    pub fn s_max(&self) -> i32 {
        self.s_min + self.len() as i32 - 1
    }

    pub fn len(&self) -> usize {
        self.cum.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, symbol: i32) -> bool {
        symbol >= self.s_min && symbol <= self.s_max()
    }

    /// (start, freq) of a symbol.
    pub fn range_of(&self, symbol: i32) -> Option<(u32, u32)> {
        if !self.contains(symbol) {
            return None;
        }
        let k = (symbol - self.s_min) as usize;
        Some((self.cum[k], self.cum[k + 1] - self.cum[k]))
    }

    /// Symbol whose interval contains `value` (< TOTAL), with its start and freq.
    pub fn lookup(&self, value: u32) -> (i32, u32, u32) {
        let k = self.cum.partition_point(|&c| c <= value) - 1;
        (self.s_min + k as i32, self.cum[k], self.cum[k + 1] - self.cum[k])
    }

    pub fn probability(&self, symbol: i32) -> f64 {
        self.range_of(symbol)
            .map_or(0.0, |(_, f)| f as f64 / TOTAL as f64)
    }

    /// Ideal code length of `symbol` under this table.
    pub fn bits(&self, symbol: i32) -> f64 {
        -self.probability(symbol).log2()
    }

    pub fn cumulative(&self) -> &[u32] {
        &self.cum
    }
}

/// Memoises tables by their quantized parameters.
#[derive(Debug)]
pub struct CdfCache {
    s_min: i32,
    s_max: i32,
    tables: HashMap<(i64, usize), Arc<QuantizedCdfTable>>,
}

impl CdfCache {
    pub fn new(s_min: i32, s_max: i32) -> Self {
        Self {
            s_min,
            s_max,
            tables: HashMap::new(),
        }
    }

    pub fn get(&mut self, mean: f64, scale: f64) -> Arc<QuantizedCdfTable> {
        let key = quantize_params(mean, scale, self.s_min, self.s_max);
        let (s_min, s_max) = (self.s_min, self.s_max);
        self.tables
            .entry(key)
            .or_insert_with(|| Arc::new(QuantizedCdfTable::from_quantized(key.0, key.1, s_min, s_max)))
            .clone()
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cvc_tensor::kernels::gaussian_bin_mass;
    use proptest::prelude::*;

    #[test]
    fn phi_endpoints() {
        assert_eq!(phi_q32(0), 1 << 31);
        assert_eq!(phi_q32(9 << 24), ONE_Q32);
        assert_eq!(phi_q32(-(9 << 24)), 0);
        // Φ(1) ≈ 0.841344746
        let p = phi_q32(1 << 24) as f64 / ONE_Q32 as f64;
        assert!((p - 0.841_344_746).abs() < 1e-8);
    }

    #[test]
    fn scale_levels_cover_range() {
        assert_eq!(quantize_params(0.0, 1e-9, -128, 127).1, 0);
        assert_eq!(quantize_params(0.0, 1e9, -128, 127).1, SCALE_LEVEL_COUNT - 1);
        let (_, l) = quantize_params(0.0, 1.0, -128, 127);
        assert!((scale_level_value(l) / 1.0).ln().abs() < 0.07);
    }

    #[test]
    fn mean_is_clamped_and_rounded_half_even() {
        assert_eq!(quantize_params(1e6, 1.0, -128, 127).0, 127 * 256);
        assert_eq!(quantize_params(0.5 / 256.0, 1.0, -128, 127).0, 0);
        assert_eq!(quantize_params(1.5 / 256.0, 1.0, -128, 127).0, 2);
    }

    #[test]
    fn table_tracks_continuous_likelihood() {
        let t = QuantizedCdfTable::from_gaussian(0.0, 1.0, -128, 127);
        let (_, level) = quantize_params(0.0, 1.0, -128, 127);
        let sigma = scale_level_value(level);
        // every symbol is first given one count, the rest is shared in
        // proportion to its mass; the mode also absorbs the rounding leftover
        let n = 256.0;
        let total = TOTAL as f64;
        for s in (-3..=3).filter(|&s| s != 0) {
            let exact = gaussian_bin_mass(s as f64, 0.0, sigma);
            let expected = 1.0 / total + exact * (1.0 - n / total);
            assert!((t.probability(s) - expected).abs() <= 1.0 / total, "symbol {s}");
        }
        let mode = gaussian_bin_mass(0.0, 0.0, sigma);
        assert!((t.probability(0) - mode).abs() <= n / total);
    }

    #[test]
    fn lookup_inverts_ranges() {
        let t = QuantizedCdfTable::from_gaussian(3.3, 2.0, -16, 15);
        for s in -16..=15 {
            let (start, freq) = t.range_of(s).unwrap();
            for v in [start, start + freq / 2, start + freq - 1] {
                assert_eq!(t.lookup(v), (s, start, freq));
            }
        }
    }

    proptest! {
        #[test]
        fn tables_are_valid(mean in -300.0f64..300.0, log_scale in -6.0f64..6.0) {
            let t = QuantizedCdfTable::from_gaussian(mean, log_scale.exp(), -128, 127);
            let cum = t.cumulative();
            prop_assert_eq!(cum[0], 0);
            prop_assert_eq!(*cum.last().unwrap(), TOTAL);
            prop_assert!(cum.windows(2).all(|w| w[1] > w[0]));
        }
    }
}
