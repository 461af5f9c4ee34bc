//! Per-channel factorized Gaussian prior for the hyper-latent.

use super::cdf::{CdfCache, QuantizedCdfTable};
use super::likelihood::gaussian_bin_likelihood;
use cvc_tensor::kernels::softplus;

/// Smallest scale the prior will use.
pub const MIN_SCALE: f64 = 1e-6;

/// One Gaussian (location, scale) per channel, shared by every spatial
/// position of that channel.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorizedPrior {
    pub loc: Vec<f64>,
    pub scale: Vec<f64>,
}

impl FactorizedPrior {
    /// From learned parameters: σ = softplus(raw) + 1e-6.
    pub fn from_params(loc: &[f32], raw_scale: &[f32]) -> Self {
        Self {
            loc: loc.iter().map(|&v| v as f64).collect(),
            scale: raw_scale
                .iter()
                .map(|&r| softplus(r as f64) + MIN_SCALE)
                .collect(),
        }
    }

    /// Moment fit to integer symbols laid out channel-major, `per_channel`
    /// values each.
    pub fn fit(symbols: &[i32], channels: usize, per_channel: usize) -> Self {
        assert_eq!(symbols.len(), channels * per_channel);
        let mut loc = Vec::with_capacity(channels);
        let mut scale = Vec::with_capacity(channels);
        for c in 0..channels {
            let xs = &symbols[c * per_channel..(c + 1) * per_channel];
            let n = xs.len().max(1) as f64;
            let m = xs.iter().map(|&v| v as f64).sum::<f64>() / n;
            let var = xs.iter().map(|&v| (v as f64 - m).powi(2)).sum::<f64>() / n;
            loc.push(m);
            // the rounded values already include the bin width
            scale.push(var.sqrt().max(MIN_SCALE));
        }
        Self { loc, scale }
    }

    pub fn channels(&self) -> usize {
        self.loc.len()
    }

    pub fn tables(&self, cache: &mut CdfCache) -> Vec<std::sync::Arc<QuantizedCdfTable>> {
        self.loc
            .iter()
            .zip(&self.scale)
            .map(|(&m, &s)| cache.get(m, s))
            .collect()
    }

    pub fn likelihood(&self, channel: usize, symbol: i32) -> f64 {
        gaussian_bin_likelihood(symbol as f64, self.loc[channel], self.scale[channel])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_moments() {
        let symbols: Vec<i32> = (0..200).map(|i| if i < 100 { (i % 5) - 2 } else { 10 + (i % 3) }).collect();
        let p = FactorizedPrior::fit(&symbols, 2, 100);
        assert!(p.loc[0].abs() < 0.1);
        assert!((p.loc[1] - 11.0).abs() < 0.05);
        assert!(p.scale.iter().all(|&s| s > 0.0));
    }

    #[test]
    fn scales_positive_for_any_raw_value() {
        let p = FactorizedPrior::from_params(&[0.0, 1.0, 2.0], &[-1e3, 0.0, 1e3]);
        assert!(p.scale.iter().all(|&s| s > 0.0));
    }
}
