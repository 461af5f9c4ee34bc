//! The dual variational transformer: a latent VAE over patch tokens and a
//! hyper-prior VAE over the latent grid.
//!
//! Layers hold parameter ids; values live in `params`. Every forward method
//! takes a [`Tape`], so the same model runs on its f32 store for training and
//! on an f64 cast for gradient checks.

use std::sync::Arc;

use cvc_tensor::{Checkpoint, ParamId, ParamStore, Real, Tape, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use crate::attention::window::invert;
use crate::attention::ActStage;
use crate::entropy::FactorizedPrior;
use crate::error::{Error, Result};
use crate::nn::{LayerNorm, Linear};

/// Range of the encoder's log-σ before exponentiation.
pub const LOG_SCALE_CLAMP: f64 = 10.0;
/// Added to softplus outputs so coding scales stay positive.
pub const SCALE_FLOOR: f64 = 1e-6;

/// Token transformer shared by all four sub-networks: input projection,
/// learned position embedding, ACT stages, final norm.
#[derive(Clone, Debug)]
struct Trunk {
    embed: Linear,
    pos: ParamId,
    stages: Vec<ActStage>,
    norm: LayerNorm,
    grid: (usize, usize),
}

impl Trunk {
    #[allow(clippy::too_many_arguments)]
    fn new(
        store: &mut ParamStore<f32>,
        rng: &mut impl Rng,
        name: &str,
        din: usize,
        dim: usize,
        grid: (usize, usize),
        depth: usize,
        heads: usize,
        mlp_ratio: usize,
        windows: [crate::attention::WindowSpec; 3],
    ) -> Self {
        let embed = Linear::new(store, rng, &format!("{name}.embed"), din, dim);
        let n = grid.0 * grid.1;
        let pos = store.add(
            format!("{name}.pos"),
            Tensor::from_fn(vec![n, dim], |_| rng.gen_range(-0.02f32..0.02)),
        );
        // four residual sub-blocks per stage, two branches each
        let out_gain = (1.0 / (8.0 * depth.max(1) as f64)).sqrt();
        let stages = (0..depth)
            .map(|i| ActStage::new(store, rng, &format!("{name}.stage{i}"), dim, heads, mlp_ratio, windows, out_gain))
            .collect();
        let norm = LayerNorm::new(store, &format!("{name}.norm"), dim);
        Self {
            embed,
            pos,
            stages,
            norm,
            grid,
        }
    }

    fn forward<T: Real>(&self, t: &mut Tape<T>, x: Var, batch: usize) -> cvc_tensor::Result<Var> {
        let (h, w) = self.grid;
        let e = self.embed.forward(t, x)?;
        let pos = t.param(self.pos);
        let d = t.graph.shape(pos)[1];
        let pe = tile_rows(&mut t.graph, pos, batch, h * w, d)?;
        let mut x = t.graph.add(e, pe)?;
        for s in &self.stages {
            x = s.forward(t, x, batch, h, w)?;
        }
        self.norm.forward(t, x)
    }

    fn zero_residual_outputs(&self, store: &mut ParamStore<f32>) {
        self.stages.iter().for_each(|s| s.zero_residual_outputs(store));
    }
}

fn tile_rows<T: Real>(g: &mut cvc_tensor::Graph<T>, src: Var, batch: usize, n: usize, d: usize) -> cvc_tensor::Result<Var> {
    let idx: Arc<[usize]> = (0..batch * n * d).map(|i| i % (n * d)).collect::<Vec<_>>().into();
    g.gather(src, idx, vec![batch * n, d])
}

/// Index taking `[B, C, H, W]` to token rows `[B·th·tw, C·ph·pw]`, features
/// ordered (c, py, px).
pub fn patchify_index(batch: usize, c: usize, h: usize, w: usize, ph: usize, pw: usize) -> Vec<usize> {
    let (th, tw) = (h / ph, w / pw);
    let mut idx = Vec::with_capacity(batch * c * h * w);
    for b in 0..batch {
        for ty in 0..th {
            for tx in 0..tw {
                for ci in 0..c {
                    for py in 0..ph {
                        let base = ((b * c + ci) * h + ty * ph + py) * w + tx * pw;
                        idx.extend(base..base + pw);
                    }
                }
            }
        }
    }
    idx
}

/// Index taking latent rows `[B·lh·lw, L]` to hyper tokens
/// `[B·hh·hw, hph·hpw·L]`, features ordered (py, px, l).
pub fn hyper_patchify_index(batch: usize, lh: usize, lw: usize, l: usize, hph: usize, hpw: usize) -> Vec<usize> {
    let (hh, hw) = (lh / hph, lw / hpw);
    let mut idx = Vec::with_capacity(batch * lh * lw * l);
    for b in 0..batch {
        for hy in 0..hh {
            for hx in 0..hw {
                for py in 0..hph {
                    for px in 0..hpw {
                        let row = (b * lh + hy * hph + py) * lw + hx * hpw + px;
                        idx.extend(row * l..row * l + l);
                    }
                }
            }
        }
    }
    idx
}

/// Token rows `[B·h·w, ch]` to the canonical per-item layout `[B, ch, h, w]`.
pub fn rows_to_canonical<T: Copy>(rows: &[T], batch: usize, ch: usize, h: usize, w: usize) -> Vec<T> {
    assert_eq!(rows.len(), batch * ch * h * w);
    let mut out = Vec::with_capacity(rows.len());
    for b in 0..batch {
        for c in 0..ch {
            for p in 0..h * w {
                out.push(rows[(b * h * w + p) * ch + c]);
            }
        }
    }
    out
}

pub fn canonical_to_rows<T: Copy + Default>(grid: &[T], batch: usize, ch: usize, h: usize, w: usize) -> Vec<T> {
    assert_eq!(grid.len(), batch * ch * h * w);
    let mut out = vec![T::default(); grid.len()];
    for b in 0..batch {
        for c in 0..ch {
            for p in 0..h * w {
                out[(b * h * w + p) * ch + c] = grid[(b * ch + c) * h * w + p];
            }
        }
    }
    out
}

/// Gaussian parameters as graph nodes, both `[rows, channels]`.
#[derive(Clone, Copy, Debug)]
pub struct GaussianVars {
    pub mean: Var,
    /// For the posterior this is log σ (clamped); for the coding
    /// distribution it is σ itself.
    pub spread: Var,
}

#[derive(Clone, Debug)]
pub struct VaeFormer {
    pub config: ModelConfig,
    pub params: ParamStore<f32>,
    enc: Trunk,
    enc_mean: Linear,
    enc_log_scale: Linear,
    dec: Trunk,
    dec_out: Linear,
    hyper_enc: Trunk,
    hyper_enc_out: Linear,
    hyper_dec: Trunk,
    hyper_dec_mean: Linear,
    hyper_dec_scale: Linear,
    prior_loc: ParamId,
    prior_raw_scale: ParamId,
}

#[derive(Serialize, Deserialize)]
struct CheckpointMeta {
    phase: String,
    config_hash: String,
    #[serde(default)]
    stats_hash: Option<String>,
    config: ModelConfig,
}

/// What a checkpoint records besides the weights.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckpointInfo {
    pub phase: String,
    pub stats_hash: Option<u64>,
}

impl VaeFormer {
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParamStore::new();
        let c = &config;
        let token_grid = c.token_grid();
        let hyper_grid = c.hyper_grid();
        let win = c.windows.specs()?;
        let hwin = c.hyper_windows.specs()?;
        let patch_in = c.channels * c.patch[0] * c.patch[1];
        let hyper_in = c.latent_channels * c.hyper_patch[0] * c.hyper_patch[1];
        let (d, dh, l, lz) = (c.token_dim, c.hyper_token_dim, c.latent_channels, c.hyper_latent_channels);
        let s = &mut store;
        let r = &mut rng;

        let enc = Trunk::new(s, r, "enc", patch_in, d, token_grid, c.depth, c.heads, c.mlp_ratio, win);
        let enc_mean = Linear::new(s, r, "enc.mean", d, l);
        let enc_log_scale = Linear::with_gain(s, r, "enc.log_scale", d, l, 0.1);
        s.value_mut(enc_log_scale.bias).data_mut().fill(-1.0);
        let dec = Trunk::new(s, r, "dec", l, d, token_grid, c.depth, c.heads, c.mlp_ratio, win);
        let dec_out = Linear::new(s, r, "dec.out", d, patch_in);
        let hyper_enc = Trunk::new(s, r, "hyper_enc", hyper_in, dh, hyper_grid, c.hyper_depth, c.hyper_heads, c.mlp_ratio, hwin);
        let hyper_enc_out = Linear::new(s, r, "hyper_enc.out", dh, lz);
        let hyper_dec = Trunk::new(s, r, "hyper_dec", lz, dh, hyper_grid, c.hyper_depth, c.hyper_heads, c.mlp_ratio, hwin);
        let hyper_dec_mean = Linear::new(s, r, "hyper_dec.mean", dh, hyper_in);
        let hyper_dec_scale = Linear::with_gain(s, r, "hyper_dec.scale", dh, hyper_in, 0.1);
        // softplus(1) ≈ 1.3: a broad coding distribution before training
        s.value_mut(hyper_dec_scale.bias).data_mut().fill(1.0);
        let prior_loc = s.add("prior.loc", Tensor::zeros(vec![lz]));
        let prior_raw_scale = s.add("prior.raw_scale", Tensor::full(vec![lz], 1.0));

        Ok(Self {
            config,
            params: store,
            enc,
            enc_mean,
            enc_log_scale,
            dec,
            dec_out,
            hyper_enc,
            hyper_enc_out,
            hyper_dec,
            hyper_dec_mean,
            hyper_dec_scale,
            prior_loc,
            prior_raw_scale,
        })
    }

    /// Trainable mask that freezes the latent encoder (`enc.*`).
    pub fn mask_without_encoder(&self) -> Vec<bool> {
        self.params.iter().map(|(_, p)| !p.name.starts_with("enc.")).collect()
    }

    /// Makes every residual branch contribute zero.
    pub fn zero_residual_outputs(&mut self) {
        for trunk in [&self.enc, &self.dec, &self.hyper_enc, &self.hyper_dec] {
            trunk.zero_residual_outputs(&mut self.params);
        }
    }

    fn check_input<T: Real>(&self, t: &Tape<T>, x: Var) -> Result<usize> {
        let s = t.graph.shape(x);
        let c = &self.config;
        if s.len() != 4 || s[1] != c.channels || s[2] != c.height || s[3] != c.width {
            return Err(Error::Config(format!(
                "input shape {s:?} does not match model grid [B, {}, {}, {}]",
                c.channels, c.height, c.width
            )));
        }
        Ok(s[0])
    }

    fn check_rows<T: Real>(&self, t: &Tape<T>, v: Var, per_item: usize, cols: usize, what: &str) -> Result<usize> {
        let s = t.graph.shape(v);
        if s.len() != 2 || s[1] != cols || s[0] % per_item != 0 || s[0] == 0 {
            return Err(Error::Config(format!(
                "{what} shape {s:?} is not [B·{per_item}, {cols}]"
            )));
        }
        Ok(s[0] / per_item)
    }

    /// Posterior (μ_x, log σ_x) for a `[B, C, H, W]` input, as latent rows.
    pub fn encode<T: Real>(&self, t: &mut Tape<T>, x: Var) -> Result<GaussianVars> {
        let batch = self.check_input(t, x)?;
        let c = &self.config;
        let idx: Arc<[usize]> = patchify_index(batch, c.channels, c.height, c.width, c.patch[0], c.patch[1]).into();
        let (th, tw) = c.token_grid();
        let rows = batch * th * tw;
        let tokens = t.graph.gather(x, idx, vec![rows, c.channels * c.patch[0] * c.patch[1]])?;
        let h = self.enc.forward(t, tokens, batch)?;
        let mean = self.enc_mean.forward(t, h)?;
        let s = self.enc_log_scale.forward(t, h)?;
        let lim = T::from_f64(LOG_SCALE_CLAMP);
        let spread = t.graph.clamp(s, -lim, lim);
        Ok(GaussianVars { mean, spread })
    }

    /// y = μ + σ·ε with ε supplied by the caller.
    pub fn reparameterize<T: Real>(&self, t: &mut Tape<T>, post: GaussianVars, eps: Var) -> Result<Var> {
        let sigma = t.graph.exp(post.spread);
        let noise = t.graph.mul(sigma, eps)?;
        Ok(t.graph.add(post.mean, noise)?)
    }

    /// KL(N(μ, σ²) ‖ N(0, 1)) summed over all elements.
    pub fn kl<T: Real>(&self, t: &mut Tape<T>, post: GaussianVars) -> Result<Var> {
        Ok(kl_divergence(&mut t.graph, post.mean, post.spread)?)
    }

    /// Reconstruction `[B, C, H, W]` from latent rows.
    pub fn decode<T: Real>(&self, t: &mut Tape<T>, y: Var) -> Result<Var> {
        let c = &self.config;
        let (th, tw) = c.token_grid();
        let batch = self.check_rows(t, y, th * tw, c.latent_channels, "latent")?;
        let h = self.dec.forward(t, y, batch)?;
        let out = self.dec_out.forward(t, h)?;
        let idx = patchify_index(batch, c.channels, c.height, c.width, c.patch[0], c.patch[1]);
        let inv: Arc<[usize]> = invert(&idx).into();
        Ok(t.graph.gather(out, inv, vec![batch, c.channels, c.height, c.width])?)
    }

    /// Continuous hyper-latent rows `[B·hh·hw, Lz]` from latent rows.
    pub fn hyper_encode<T: Real>(&self, t: &mut Tape<T>, y: Var) -> Result<Var> {
        let c = &self.config;
        let (lh, lw) = c.latent_grid();
        let batch = self.check_rows(t, y, lh * lw, c.latent_channels, "latent")?;
        let (hh, hw) = c.hyper_grid();
        let idx: Arc<[usize]> =
            hyper_patchify_index(batch, lh, lw, c.latent_channels, c.hyper_patch[0], c.hyper_patch[1]).into();
        let width = c.latent_channels * c.hyper_patch[0] * c.hyper_patch[1];
        let tokens = t.graph.gather(y, idx, vec![batch * hh * hw, width])?;
        let h = self.hyper_enc.forward(t, tokens, batch)?;
        Ok(self.hyper_enc_out.forward(t, h)?)
    }

    /// Coding distribution (μ, σ) of the latent, as latent rows.
    pub fn hyper_decode<T: Real>(&self, t: &mut Tape<T>, z: Var) -> Result<GaussianVars> {
        let c = &self.config;
        let (hh, hw) = c.hyper_grid();
        let batch = self.check_rows(t, z, hh * hw, c.hyper_latent_channels, "hyper-latent")?;
        let (lh, lw) = c.latent_grid();
        let h = self.hyper_dec.forward(t, z, batch)?;
        let mean = self.hyper_dec_mean.forward(t, h)?;
        let raw = self.hyper_dec_scale.forward(t, h)?;
        let idx = hyper_patchify_index(batch, lh, lw, c.latent_channels, c.hyper_patch[0], c.hyper_patch[1]);
        let inv: Arc<[usize]> = invert(&idx).into();
        let shape = vec![batch * lh * lw, c.latent_channels];
        let mean = t.graph.gather(mean, inv.clone(), shape.clone())?;
        let raw = t.graph.gather(raw, inv, shape)?;
        let sp = t.graph.softplus(raw);
        let spread = t.graph.add_scalar(sp, T::from_f64(SCALE_FLOOR));
        Ok(GaussianVars { mean, spread })
    }

    /// Factorized prior parameters broadcast to `rows` hyper-latent rows.
    pub fn prior_vars<T: Real>(&self, t: &mut Tape<T>, rows: usize) -> Result<GaussianVars> {
        let loc = t.param(self.prior_loc);
        let raw = t.param(self.prior_raw_scale);
        let sp = t.graph.softplus(raw);
        let scale = t.graph.add_scalar(sp, T::from_f64(SCALE_FLOOR));
        Ok(GaussianVars {
            mean: t.graph.expand_rows(loc, rows)?,
            spread: t.graph.expand_rows(scale, rows)?,
        })
    }

    pub fn prior(&self) -> FactorizedPrior {
        FactorizedPrior::from_params(
            self.params.get(self.prior_loc).value.data(),
            self.params.get(self.prior_raw_scale).value.data(),
        )
    }

    /// Serialises weights with the config (and optionally the normalisation
    /// statistics hash) in the metadata.
    pub fn to_checkpoint(&self, phase: &str, stats_hash: Option<u64>) -> Checkpoint {
        let meta = CheckpointMeta {
            phase: phase.to_string(),
            config_hash: format!("{:016x}", self.config.hash()),
            stats_hash: stats_hash.map(|h| format!("{h:016x}")),
            config: self.config.clone(),
        };
        Checkpoint {
            metadata: toml::to_string(&meta).expect("metadata serialises"),
            params: self.params.clone(),
        }
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>, phase: &str, stats_hash: Option<u64>) -> Result<()> {
        Ok(self.to_checkpoint(phase, stats_hash).save(path)?)
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<(Self, CheckpointInfo)> {
        let meta: CheckpointMeta =
            toml::from_str(&ckpt.metadata).map_err(|e| Error::Config(format!("checkpoint metadata: {e}")))?;
        let parse = |h: &str| {
            u64::from_str_radix(h, 16).map_err(|_| Error::Config(format!("bad hash {h:?} in checkpoint")))
        };
        let expected = parse(&meta.config_hash)?;
        let found = meta.config.hash();
        if expected != found {
            return Err(Error::HashMismatch {
                what: "checkpoint config",
                expected,
                found,
            });
        }
        let stats_hash = meta.stats_hash.as_deref().map(parse).transpose()?;
        let mut model = Self::new(meta.config)?;
        model.params.load_from(&ckpt.params)?;
        if ckpt.params.len() != model.params.len() {
            return Err(Error::Config(format!(
                "checkpoint has {} tensors, model expects {}",
                ckpt.params.len(),
                model.params.len()
            )));
        }
        Ok((
            model,
            CheckpointInfo {
                phase: meta.phase,
                stats_hash,
            },
        ))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<(Self, CheckpointInfo)> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }

    /// Copies weights from a model of the same architecture.
    pub fn load_weights(&mut self, other: &VaeFormer) -> Result<()> {
        if !self.config.same_architecture(&other.config) {
            return Err(Error::Config("architectures differ".into()));
        }
        self.params.load_from(&other.params)?;
        Ok(())
    }
}

/// ½ Σ (−2 log σ + μ² + σ² − 1) with `log_scale` = log σ.
pub fn kl_divergence<T: Real>(g: &mut cvc_tensor::Graph<T>, mean: Var, log_scale: Var) -> cvc_tensor::Result<Var> {
    let m2 = g.square(mean);
    let two_s = g.scale(log_scale, T::from_f64(2.0));
    let var = g.exp(two_s);
    let a = g.sub(m2, two_s)?;
    let b = g.add(a, var)?;
    let c = g.add_scalar(b, T::from_f64(-1.0));
    let s = g.sum_all(c);
    Ok(g.scale(s, T::from_f64(0.5)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    fn tiny() -> VaeFormer {
        VaeFormer::new(ModelConfig::tiny()).unwrap()
    }

    fn input(cfg: &ModelConfig, batch: usize, seed: u64) -> Tensor<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor::from_fn(vec![batch, cfg.channels, cfg.height, cfg.width], |_| {
            StandardNormal.sample(&mut rng)
        })
    }

    #[test]
    fn patchify_is_a_permutation() {
        let mut idx = patchify_index(2, 3, 8, 12, 2, 4);
        idx.sort();
        assert_eq!(idx, (0..2 * 3 * 8 * 12).collect::<Vec<_>>());
        let mut h = hyper_patchify_index(2, 4, 8, 3, 2, 4);
        h.sort();
        assert_eq!(h, (0..2 * 4 * 8 * 3).collect::<Vec<_>>());
    }

    #[test]
    fn canonical_layout_roundtrip() {
        let rows: Vec<u32> = (0..2 * 3 * 4 * 5).collect();
        let g = rows_to_canonical(&rows, 2, 3, 4, 5);
        // channel 1 of item 0 at position 0 is row 0, column 1
        assert_eq!(g[20], 1);
        assert_eq!(canonical_to_rows(&g, 2, 3, 4, 5), rows);
    }

    #[test]
    fn shapes_through_all_paths() {
        let m = tiny();
        let c = m.config.clone();
        let mut t = Tape::frozen(&m.params);
        let x = t.graph.constant(input(&c, 2, 1));
        let post = m.encode(&mut t, x).unwrap();
        let (th, tw) = c.token_grid();
        assert_eq!(t.graph.shape(post.mean), &[2 * th * tw, c.latent_channels]);
        let xh = m.decode(&mut t, post.mean).unwrap();
        assert_eq!(t.graph.shape(xh), &[2, c.channels, c.height, c.width]);
        let z = m.hyper_encode(&mut t, post.mean).unwrap();
        let (hh, hw) = c.hyper_grid();
        assert_eq!(t.graph.shape(z), &[2 * hh * hw, c.hyper_latent_channels]);
        let coding = m.hyper_decode(&mut t, z).unwrap();
        assert_eq!(t.graph.shape(coding.spread), t.graph.shape(post.mean));
        assert!(t.graph.value(coding.spread).data().iter().all(|&s| s > 0.0));
    }

    #[test]
    fn wrong_shape_is_rejected() {
        let m = tiny();
        let mut t = Tape::frozen(&m.params);
        let x = t.graph.constant(Tensor::zeros(vec![1, 3, 16, 32]));
        assert!(m.encode(&mut t, x).is_err());
        let y = t.graph.constant(Tensor::zeros(vec![7, m.config.latent_channels]));
        assert!(m.decode(&mut t, y).is_err());
    }

    #[test]
    fn scales_positive_for_extreme_inputs() {
        let m = tiny();
        let c = m.config.clone();
        for v in [1e3f32, -1e3] {
            let mut t = Tape::frozen(&m.params);
            let x = t.graph.constant(Tensor::full(vec![1, c.channels, c.height, c.width], v));
            let post = m.encode(&mut t, x).unwrap();
            let s = t.graph.exp(post.spread);
            assert!(t.graph.value(s).data().iter().all(|&s| s > 0.0 && s.is_finite()));
            let z = t.graph.constant(Tensor::full(
                vec![c.hyper_grid().0 * c.hyper_grid().1, c.hyper_latent_channels],
                v,
            ));
            let coding = m.hyper_decode(&mut t, z).unwrap();
            assert!(t.graph.value(coding.spread).data().iter().all(|&s| s > 0.0 && s.is_finite()));
        }
    }

    #[test]
    fn forward_is_deterministic() {
        let m = tiny();
        let x = input(&m.config, 1, 3);
        let run = || {
            let mut t = Tape::frozen(&m.params);
            let xv = t.graph.constant(x.clone());
            let post = m.encode(&mut t, xv).unwrap();
            let xh = m.decode(&mut t, post.mean).unwrap();
            t.graph.value(xh).clone()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn kl_closed_form_values() {
        let mut g = cvc_tensor::Graph::<f64>::new();
        let m = g.constant(Tensor::scalar(1.0).reshaped(vec![1]).unwrap());
        let s = g.constant(Tensor::zeros(vec![1]));
        let kl = kl_divergence(&mut g, m, s).unwrap();
        assert_eq!(g.value(kl).item(), 0.5);
        let m = g.constant(Tensor::zeros(vec![5]));
        let s = g.constant(Tensor::zeros(vec![5]));
        let kl = kl_divergence(&mut g, m, s).unwrap();
        assert_eq!(g.value(kl).item(), 0.0);
    }

    #[test]
    fn kl_matches_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        for _ in 0..3 {
            let mu: f64 = rng.gen_range(-2.0..2.0);
            let log_s: f64 = rng.gen_range(-1.0..0.7);
            let sigma = log_s.exp();
            let mut acc = 0.0;
            for _ in 0..n {
                let e: f64 = StandardNormal.sample(&mut rng);
                let y = mu + sigma * e;
                // log q(y) − log p(y)
                acc += -log_s - 0.5 * e * e + 0.5 * y * y;
            }
            let mc = acc / n as f64;
            let mut g = cvc_tensor::Graph::<f64>::new();
            let m = g.constant(Tensor::full(vec![1], mu));
            let s = g.constant(Tensor::full(vec![1], log_s));
            let kl = kl_divergence(&mut g, m, s).unwrap();
            let exact = g.value(kl).item();
            assert!((mc - exact).abs() <= 0.01 * exact.max(0.05), "{mc} vs {exact}");
        }
    }

    #[test]
    fn reparameterization_moments() {
        let m = tiny();
        let n = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let store = m.params.cast::<f64>();
        let mut t = Tape::frozen(&store);
        let post = GaussianVars {
            mean: t.graph.constant(Tensor::full(vec![n, 1], 1.5)),
            spread: t.graph.constant(Tensor::full(vec![n, 1], 0.3f64.ln())),
        };
        let eps = t.graph.constant(Tensor::from_fn(vec![n, 1], |_| StandardNormal.sample(&mut rng)));
        let y = m.reparameterize(&mut t, post, eps).unwrap();
        let d = t.graph.value(y).data();
        let mean = d.iter().sum::<f64>() / n as f64;
        let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        assert!((mean - 1.5).abs() < 4.0 * 0.3 / (n as f64).sqrt());
        assert!((var.sqrt() - 0.3).abs() < 0.005);
    }

    #[test]
    fn checkpoint_roundtrip_and_tamper() {
        let m = tiny();
        let ck = m.to_checkpoint("pretrain", Some(42));
        let (back, info) = VaeFormer::from_checkpoint(&ck).unwrap();
        assert_eq!(info.stats_hash, Some(42));
        assert_eq!(info.phase, "pretrain");
        for ((_, a), (_, b)) in m.params.iter().zip(back.params.iter()) {
            assert_eq!(a.value, b.value);
        }
        let mut bad = ck.clone();
        bad.metadata = bad.metadata.replace("lambda = 1.0", "lambda = 2.0");
        assert!(matches!(
            VaeFormer::from_checkpoint(&bad),
            Err(Error::HashMismatch { .. })
        ));
    }

    #[test]
    fn zero_residuals_keep_finite_output() {
        let mut m = tiny();
        m.zero_residual_outputs();
        let mut t = Tape::frozen(&m.params);
        let x = t.graph.constant(input(&m.config, 1, 2));
        let post = m.encode(&mut t, x).unwrap();
        assert!(t.graph.value(post.mean).all_finite());
    }
}
