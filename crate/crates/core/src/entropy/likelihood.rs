//! Likelihood of integer symbols under a Gaussian convolved with U(−½, ½).

use cvc_tensor::kernels::gaussian_bin_mass;

/// Smallest probability assigned to a symbol when estimating coded size;
/// matches the resolution of the 16-bit coder tables.
pub const LIKELIHOOD_FLOOR: f64 = 1.0 / 65536.0;

/// Φ((ŷ + ½ − μ)/σ) − Φ((ŷ − ½ − μ)/σ).
pub fn gaussian_bin_likelihood(symbol: f64, mean: f64, scale: f64) -> f64 {
    gaussian_bin_mass(symbol, mean, scale)
}

/// Σ −log₂ max(p_i, floor) over symbols with per-element parameters.
pub fn rate_bits(symbols: &[i32], means: &[f64], scales: &[f64], floor: f64) -> f64 {
    assert!(symbols.len() == means.len() && symbols.len() == scales.len());
    symbols
        .iter()
        .zip(means.iter().zip(scales))
        .map(|(&s, (&m, &sc))| -gaussian_bin_likelihood(s as f64, m, sc).max(floor).log2())
        .sum()
}
