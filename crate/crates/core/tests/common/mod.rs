//! Independent brute-force reference implementations of the field metrics,
//! shared by the metric tests and the acceptance suite.
#![allow(dead_code)]

use cvc::data::{regular_coordinates, GridTensor, NormStats};
use cvc::metrics::RQE_QUANTILES;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_grid(seed: u64, c: usize, h: usize, w: usize) -> GridTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lat, lon) = regular_coordinates(h, w);
    let names = (0..c).map(|i| format!("v{i}")).collect();
    let data = (0..c * h * w).map(|_| rng.gen_range(-3.0f32..3.0)).collect();
    GridTensor::new(names, lat, lon, data).unwrap()
}

pub fn perturbed(x: &GridTensor, seed: u64, amp: f32) -> GridTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    x.with_data(x.data().iter().map(|v| v + amp * rng.gen_range(-1.0f32..1.0)).collect()).unwrap()
}

pub fn ref_weighted_rmse(x: &GridTensor, y: &GridTensor, c: usize) -> f64 {
    let (_, h, w) = x.dims();
    let lat = x.lat();
    let norm: f64 = lat.iter().map(|l| (l * std::f64::consts::PI / 180.0).cos()).sum::<f64>() / h as f64;
    let mut s = 0.0;
    for i in 0..h {
        let wt = (lat[i] * std::f64::consts::PI / 180.0).cos() / norm;
        for j in 0..w {
            let d = x.get(c, i, j) as f64 - y.get(c, i, j) as f64;
            s += wt * d * d;
        }
    }
    (s / (h * w) as f64).sqrt()
}

pub fn ref_overall_mse(x: &GridTensor, y: &GridTensor, st: &NormStats) -> f64 {
    let (c, h, w) = x.dims();
    let mut s = 0.0;
    for k in 0..c {
        for i in 0..h {
            for j in 0..w {
                let a = (x.get(k, i, j) as f64 - st.mean[k]) / st.std[k];
                let b = (y.get(k, i, j) as f64 - st.mean[k]) / st.std[k];
                s += (a - b) * (a - b);
            }
        }
    }
    100.0 * s / (c * h * w) as f64
}

/// Quantile by the "(n − 1)·q" linear rule, computed from a fresh copy.
pub fn ref_quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = (v.len() - 1) as f64 * q;
    let lo = h.floor();
    let i = lo as usize;
    if i + 1 >= v.len() {
        return v[v.len() - 1];
    }
    v[i] * (1.0 - (h - lo)) + v[i + 1] * (h - lo)
}

pub fn channel(x: &GridTensor, c: usize) -> Vec<f64> {
    x.channel(c).iter().map(|&v| v as f64).collect()
}

pub fn ref_sedi(x: &GridTensor, y: &GridTensor, q: f64, c: usize) -> f64 {
    let xs = channel(x, c);
    let ys = channel(y, c);
    let t = ref_quantile(&xs, q);
    let obs: Vec<bool> = xs.iter().map(|&v| v > t).collect();
    let pred: Vec<bool> = ys.iter().map(|&v| v > t).collect();
    let n_obs = obs.iter().filter(|&&o| o).count() as f64;
    let n_not = obs.len() as f64 - n_obs;
    let hits = obs.iter().zip(&pred).filter(|(o, p)| **o && **p).count() as f64;
    let fa = obs.iter().zip(&pred).filter(|(o, p)| !**o && **p).count() as f64;
    let hr = (hits / n_obs).clamp(1e-9, 1.0 - 1e-9);
    let fr = (fa / n_not).clamp(1e-9, 1.0 - 1e-9);
    let num = fr.ln() - hr.ln() - (1.0 - fr).ln() + (1.0 - hr).ln();
    let den = fr.ln() + hr.ln() + (1.0 - fr).ln() + (1.0 - hr).ln();
    num / den
}

pub fn ref_rqe(x: &GridTensor, y: &GridTensor, c: usize) -> f64 {
    let xs = channel(x, c);
    let ys = channel(y, c);
    let num: f64 = RQE_QUANTILES.iter().map(|&q| ref_quantile(&ys, q) - ref_quantile(&xs, q)).sum();
    let den: f64 = RQE_QUANTILES.iter().map(|&q| ref_quantile(&xs, q).abs()).sum();
    (num / den).clamp(-1.0, 1.0)
}

