//! Field-comparison scores. All functions are pure and work in f64.

use crate::data::{GridTensor, NormStats};
use crate::error::{Error, Result};

/// Quantiles used by the SEDI tables.
pub const SEDI_QUANTILES: [f64; 4] = [0.90, 0.95, 0.98, 0.995];
/// Top quantiles aggregated by RQE.
pub const RQE_QUANTILES: [f64; 6] = [0.90, 0.95, 0.98, 0.99, 0.995, 0.999];
/// Rates are clamped to [ε, 1 − ε] before taking logs in SEDI.
pub const SEDI_EPS: f64 = 1e-9;

fn same_grid(x: &GridTensor, y: &GridTensor) -> Result<()> {
    if !x.same_grid(y) {
        return Err(Error::Data("fields are on different grids".into()));
    }
    Ok(())
}

/// Per-row weights H·cos φ / Σ cos φ, so that they average to one.
pub fn latitude_weights(lat_deg: &[f64]) -> Vec<f64> {
    let cos: Vec<f64> = lat_deg.iter().map(|l| l.to_radians().cos()).collect();
    let total: f64 = cos.iter().sum();
    cos.iter().map(|c| c * lat_deg.len() as f64 / total).collect()
}

/// Latitude-weighted RMSE of one channel of one instance.
pub fn weighted_rmse(x: &GridTensor, xh: &GridTensor, channel: usize) -> Result<f64> {
    same_grid(x, xh)?;
    let (_, h, w) = x.dims();
    let weights = latitude_weights(x.lat());
    let (a, b) = (x.channel(channel), xh.channel(channel));
    let mut acc = 0.0;
    for (row, &wt) in weights.iter().enumerate() {
        let r = row * w..(row + 1) * w;
        acc += wt * a[r.clone()]
            .iter()
            .zip(&b[r])
            .map(|(&p, &q)| (p as f64 - q as f64).powi(2))
            .sum::<f64>();
    }
    Ok((acc / (h * w) as f64).sqrt())
}

/// Time mean of per-instance weighted RMSE.
pub fn mean_weighted_rmse(pairs: &[(GridTensor, GridTensor)], channel: usize) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Data("no instances to score".into()));
    }
    let mut acc = 0.0;
    for (x, xh) in pairs {
        acc += weighted_rmse(x, xh, channel)?;
    }
    Ok(acc / pairs.len() as f64)
}

/// Mean squared error over all channels and points in normalised space,
/// times 100.
pub fn overall_mse(x: &GridTensor, xh: &GridTensor, stats: &NormStats) -> Result<f64> {
    same_grid(x, xh)?;
    let (c, h, w) = x.dims();
    let hw = h * w;
    let mut acc = 0.0;
    for ch in 0..c {
        let (m, s) = (stats.mean[ch], stats.std[ch]);
        for (&p, &q) in x.channel(ch).iter().zip(xh.channel(ch)) {
            let d = (p as f64 - m) / s - (q as f64 - m) / s;
            acc += d * d;
        }
    }
    Ok(100.0 * acc / (c * hw) as f64)
}

/// Bits per sub-pixel and compression ratio for a container of `bytes`.
pub fn bpsp_and_ratio(bytes: usize, values: usize, bit_depth: u32) -> Result<(f64, f64)> {
    if values == 0 || bytes == 0 {
        return Err(Error::Data("bpsp needs nonzero sizes".into()));
    }
    let bpsp = 8.0 * bytes as f64 / values as f64;
    let ratio = (values as f64 * bit_depth as f64 / 8.0) / bytes as f64;
    Ok((bpsp, ratio))
}

/// Linear-interpolation quantile of ascending `sorted` values.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty set");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

fn sorted_channel(x: &GridTensor, channel: usize) -> Vec<f64> {
    let mut v: Vec<f64> = x.channel(channel).iter().map(|&a| a as f64).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Which tail counts as extreme.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tail {
    /// Values above the q-quantile.
    Upper,
    /// Values below the (1 − q)-quantile.
    Lower,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sedi {
    pub value: f64,
    pub hit_rate: f64,
    pub false_alarm_rate: f64,
    /// A rate hit 0 or 1 and had to be clamped.
    pub degenerate: bool,
}

/// Symmetric Extremal Dependence Index of the extreme masks of `xh` against
/// those of the reference `x`, at the reference field's quantile.
pub fn sedi(x: &GridTensor, xh: &GridTensor, q: f64, channel: usize, tail: Tail) -> Result<Sedi> {
    same_grid(x, xh)?;
    let sorted = sorted_channel(x, channel);
    let (thr, extreme): (f64, Box<dyn Fn(f64, f64) -> bool>) = match tail {
        Tail::Upper => (quantile_sorted(&sorted, q), Box::new(|v, t| v > t)),
        Tail::Lower => (quantile_sorted(&sorted, 1.0 - q), Box::new(|v, t| v < t)),
    };
    let (mut hits, mut misses, mut false_alarms, mut negatives) = (0u64, 0u64, 0u64, 0u64);
    for (&a, &b) in x.channel(channel).iter().zip(xh.channel(channel)) {
        let obs = extreme(a as f64, thr);
        let pred = extreme(b as f64, thr);
        match (obs, pred) {
            (true, true) => hits += 1,
            (true, false) => misses += 1,
            (false, true) => false_alarms += 1,
            (false, false) => negatives += 1,
        }
    }
    let ratio = |n: u64, d: u64| if d == 0 { f64::NAN } else { n as f64 / d as f64 };
    let h_raw = ratio(hits, hits + misses);
    let f_raw = ratio(false_alarms, false_alarms + negatives);
    let clamp = |r: f64| {
        if r.is_nan() {
            (0.5, true)
        } else if r < SEDI_EPS || r > 1.0 - SEDI_EPS {
            (r.clamp(SEDI_EPS, 1.0 - SEDI_EPS), true)
        } else {
            (r, false)
        }
    };
    let (h, dh) = clamp(h_raw);
    let (f, df) = clamp(f_raw);
    let (lf, lh, lf1, lh1) = (f.ln(), h.ln(), (1.0 - f).ln(), (1.0 - h).ln());
    Ok(Sedi {
        value: (lf - lh - lf1 + lh1) / (lf + lh + lf1 + lh1),
        hit_rate: h_raw,
        false_alarm_rate: f_raw,
        degenerate: dh || df,
    })
}

/// Relative quantile error Σ (q_k(x̂) − q_k(x)) / Σ |q_k(x)| over the top
/// quantiles, clipped to [−1, 1]. Negative means extremes are underestimated.
pub fn rqe(x: &GridTensor, xh: &GridTensor, channel: usize) -> Result<f64> {
    same_grid(x, xh)?;
    let (a, b) = (sorted_channel(x, channel), sorted_channel(xh, channel));
    let mut num = 0.0;
    let mut den = 0.0;
    for &q in &RQE_QUANTILES {
        let qa = quantile_sorted(&a, q);
        num += quantile_sorted(&b, q) - qa;
        den += qa.abs();
    }
    if den == 0.0 {
        return Ok(if num == 0.0 { 0.0 } else { num.signum() });
    }
    Ok((num / den).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::regular_coordinates;

    fn grid(c: usize, h: usize, w: usize, f: impl Fn(usize) -> f32) -> GridTensor {
        let (lat, lon) = regular_coordinates(h, w);
        let names = (0..c).map(|i| format!("c{i}")).collect();
        GridTensor::new(names, lat, lon, (0..c * h * w).map(f).collect()).unwrap()
    }

    #[test]
    fn constant_error_gives_its_magnitude() {
        let x = grid(2, 8, 16, |i| (i as f32 * 0.3).sin());
        let xh = x.with_data(x.data().iter().map(|v| v + 2.0).collect()).unwrap();
        let r = weighted_rmse(&x, &xh, 1).unwrap();
        assert!((r - 2.0).abs() < 1e-6);
        assert_eq!(weighted_rmse(&x, &x, 0).unwrap(), 0.0);
    }

    #[test]
    fn ratio_bpsp_identity() {
        let (bpsp, ratio) = bpsp_and_ratio(100, 100, 32).unwrap();
        assert_eq!((bpsp, ratio), (8.0, 4.0));
        let (b, r) = bpsp_and_ratio(1234, 16384, 32).unwrap();
        assert!((b * r - 32.0).abs() < 1e-12);
        assert!(bpsp_and_ratio(0, 10, 32).is_err());
    }

    #[test]
    fn quantile_interpolates() {
        let v = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(quantile_sorted(&v, 0.5), 1.5);
        assert_eq!(quantile_sorted(&v, 1.0), 3.0);
        assert_eq!(quantile_sorted(&v, 0.0), 0.0);
    }

    #[test]
    fn sedi_perfect_and_symmetric() {
        let x = grid(1, 16, 32, |i| ((i * 7919) % 1000) as f32 * 0.01);
        let s = sedi(&x, &x, 0.95, 0, Tail::Upper).unwrap();
        assert!((s.value - 1.0).abs() < 1e-9);
        let xh = x.with_data(x.data().iter().enumerate().map(|(i, v)| v + (i % 5) as f32 * 0.7).collect()).unwrap();
        let up = sedi(&x, &xh, 0.9, 0, Tail::Upper).unwrap();
        let neg = |g: &GridTensor| g.with_data(g.data().iter().map(|v| -v).collect()).unwrap();
        let down = sedi(&neg(&x), &neg(&xh), 0.9, 0, Tail::Lower).unwrap();
        assert_eq!(up, down);
    }

    #[test]
    fn rqe_signs() {
        let x = grid(1, 16, 32, |i| ((i * 31) % 512) as f32 / 100.0 - 2.0);
        assert_eq!(rqe(&x, &x, 0).unwrap(), 0.0);
        let med = 0.56;
        let shrunk = x.with_data(x.data().iter().map(|v| med + 0.5 * (v - med)).collect()).unwrap();
        assert!(rqe(&x, &shrunk, 0).unwrap() < 0.0);
        let inflated = x.with_data(x.data().iter().map(|&v| if v > 2.0 { v * 1.5 } else { v }).collect()).unwrap();
        assert!(rqe(&x, &inflated, 0).unwrap() > 0.0);
    }
}
