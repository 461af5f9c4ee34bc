//! The two training objectives. Both average over the batch and sum over
//! grid and channel elements.

use cvc_tensor::{Real, Tape, Var};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{GaussianVars, VaeFormer};

/// Likelihood floor inside the rate terms.
pub const RATE_FLOOR: f64 = 1e-9;

/// Weight on the pretraining KL term at desk scale.
pub const DEFAULT_BETA: f64 = 1e-4;

/// Per-item noise for one pretraining forward pass.
#[derive(Clone, Debug)]
pub struct PretrainNoise<T> {
    /// Standard normal, one per latent element.
    pub eps: cvc_tensor::Tensor<T>,
}

/// Per-item noise for one rate-distortion forward pass.
#[derive(Clone, Debug)]
pub struct RdNoise<T> {
    /// U(−½, ½) added to y.
    pub y: cvc_tensor::Tensor<T>,
    /// U(−½, ½) added to z.
    pub z: cvc_tensor::Tensor<T>,
}

/// Loss components as they enter the total; they sum to `total`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub total: f64,
    /// Weighted distortion contribution.
    pub distortion: f64,
    /// β·KL in pretraining, λ·rate_y in fine-tuning.
    pub latent: f64,
    /// Hyper-latent rate (fine-tuning only).
    pub hyper: f64,
    /// Unweighted ‖x − x̂‖² per item.
    pub squared_error: f64,
    /// Unweighted KL (pretraining) or latent bits (fine-tuning) per item.
    pub latent_raw: f64,
}

pub struct LossVars {
    pub total: Var,
    pub distortion: Var,
    pub latent: Var,
    pub hyper: Option<Var>,
    pub squared_error: Var,
    pub latent_raw: Var,
}

impl LossVars {
    pub fn parts<T: Real>(&self, t: &Tape<T>) -> LossParts {
        let v = |x: Var| t.graph.value(x).item().to_f64();
        LossParts {
            total: v(self.total),
            distortion: v(self.distortion),
            latent: v(self.latent),
            hyper: self.hyper.map_or(0.0, v),
            squared_error: v(self.squared_error),
            latent_raw: v(self.latent_raw),
        }
    }
}

fn squared_error<T: Real>(t: &mut Tape<T>, x: Var, xh: Var) -> Result<Var> {
    let d = t.graph.sub(xh, x)?;
    let d2 = t.graph.square(d);
    Ok(t.graph.sum_all(d2))
}

/// (½‖x − x̂‖² + β·KL) / `batch`. `batch` is the full batch size, which may
/// exceed the items in `x` when gradients are accumulated over shards.
pub fn pretrain_loss<T: Real>(
    model: &VaeFormer,
    t: &mut Tape<T>,
    x: Var,
    noise: &PretrainNoise<T>,
    beta: f64,
    batch: usize,
) -> Result<LossVars> {
    let post = model.encode(t, x)?;
    let eps = t.graph.constant(noise.eps.clone());
    let y = model.reparameterize(t, post, eps)?;
    let xh = model.decode(t, y)?;
    let inv_b = 1.0 / batch as f64;
    let se = squared_error(t, x, xh)?;
    let kl = model.kl(t, post)?;
    let distortion = t.graph.scale(se, T::from_f64(0.5 * inv_b));
    let latent = t.graph.scale(kl, T::from_f64(beta * inv_b));
    let total = t.graph.add(distortion, latent)?;
    Ok(LossVars {
        total,
        distortion,
        latent,
        hyper: None,
        squared_error: t.graph.scale(se, T::from_f64(inv_b)),
        latent_raw: t.graph.scale(kl, T::from_f64(inv_b)),
    })
}

fn bits<T: Real>(t: &mut Tape<T>, value: Var, dist: GaussianVars) -> Result<Var> {
    let b = t.graph.gaussian_bits(value, dist.mean, dist.spread, RATE_FLOOR)?;
    Ok(t.graph.sum_all(b))
}

/// (λ·rate_y + rate_z + ‖x − x̂‖²) / `batch`, with rounding replaced by
/// additive uniform noise. The hyper-encoder sees the continuous posterior
/// mean.
pub fn rd_loss<T: Real>(
    model: &VaeFormer,
    t: &mut Tape<T>,
    x: Var,
    noise: &RdNoise<T>,
    lambda: f64,
    batch: usize,
) -> Result<LossVars> {
    let post = model.encode(t, x)?;
    let uy = t.graph.constant(noise.y.clone());
    let y_noisy = t.graph.add(post.mean, uy)?;
    let z = model.hyper_encode(t, post.mean)?;
    let uz = t.graph.constant(noise.z.clone());
    let z_noisy = t.graph.add(z, uz)?;
    let coding = model.hyper_decode(t, z_noisy)?;
    let rate_y = bits(t, y_noisy, coding)?;
    let rows = t.graph.shape(z_noisy)[0];
    let prior = model.prior_vars(t, rows)?;
    let rate_z = bits(t, z_noisy, prior)?;
    let xh = model.decode(t, y_noisy)?;
    let se = squared_error(t, x, xh)?;
    let inv_b = 1.0 / batch as f64;
    let latent = t.graph.scale(rate_y, T::from_f64(lambda * inv_b));
    let hyper = t.graph.scale(rate_z, T::from_f64(inv_b));
    let distortion = t.graph.scale(se, T::from_f64(inv_b));
    let a = t.graph.add(latent, hyper)?;
    let total = t.graph.add(a, distortion)?;
    Ok(LossVars {
        total,
        distortion,
        latent,
        hyper: Some(hyper),
        squared_error: distortion,
        latent_raw: t.graph.scale(rate_y, T::from_f64(inv_b)),
    })
}
