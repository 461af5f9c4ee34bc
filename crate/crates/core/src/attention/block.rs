use cvc_tensor::{ParamStore, Real, Result, Tape, Var};
use rand::Rng;

use super::mha::MultiHeadAttention;
use super::window::{window_merge, window_partition, WindowSpec};
use crate::nn::{LayerNorm, Mlp};

/// Pre-norm residual sub-block: attention over windows (or over the whole
/// grid when `window` is `None`), then an MLP.
#[derive(Clone, Debug)]
pub struct AttentionBlock {
    pub norm1: LayerNorm,
    pub attn: MultiHeadAttention,
    pub norm2: LayerNorm,
    pub mlp: Mlp,
    pub window: Option<WindowSpec>,
}

impl AttentionBlock {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        store: &mut ParamStore<f32>,
        rng: &mut impl Rng,
        name: &str,
        dim: usize,
        heads: usize,
        mlp_ratio: usize,
        window: Option<WindowSpec>,
        out_gain: f64,
    ) -> Self {
        Self {
            norm1: LayerNorm::new(store, &format!("{name}.norm1"), dim),
            attn: MultiHeadAttention::new(store, rng, &format!("{name}.attn"), dim, heads, out_gain),
            norm2: LayerNorm::new(store, &format!("{name}.norm2"), dim),
            mlp: Mlp::new(store, rng, &format!("{name}.mlp"), dim, dim * mlp_ratio, out_gain),
            window,
        }
    }

    /// `x` is `[batch·h·w, dim]`.
    pub fn forward<T: Real>(&self, t: &mut Tape<T>, x: Var, batch: usize, h: usize, w: usize) -> Result<Var> {
        let n = self.norm1.forward(t, x)?;
        let a = match &self.window {
            Some(spec) => {
                let p = window_partition(&mut t.graph, n, batch, h, w, spec)?;
                let a = self.attn.forward(t, p, batch * spec.count(h, w))?;
                window_merge(&mut t.graph, a, batch, h, w, spec)?
            }
            None => self.attn.forward(t, n, batch)?,
        };
        let x = t.graph.add(x, a)?;
        let n = self.norm2.forward(t, x)?;
        let m = self.mlp.forward(t, n)?;
        t.graph.add(x, m)
    }

    /// Zeroes the projections feeding the residual stream so the block
    /// becomes the identity.
    pub fn zero_residual_outputs(&self, store: &mut ParamStore<f32>) {
        self.attn.out.zero(store);
        self.mlp.fc2.zero(store);
    }

    /// Pairwise attention scores per head for one batch element.
    pub fn score_count(&self, h: usize, w: usize) -> usize {
        match &self.window {
            Some(spec) => spec.count(h, w) * spec.tokens() * spec.tokens(),
            None => (h * w) * (h * w),
        }
    }
}

/// Square, east-west and north-south window sub-blocks followed by one
/// global attention sub-block.
#[derive(Clone, Debug)]
pub struct ActStage {
    pub blocks: Vec<AttentionBlock>,
}

impl ActStage {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        store: &mut ParamStore<f32>,
        rng: &mut impl Rng,
        name: &str,
        dim: usize,
        heads: usize,
        mlp_ratio: usize,
        windows: [WindowSpec; 3],
        out_gain: f64,
    ) -> Self {
        let labels = ["square", "east_west", "north_south"];
        let mut blocks: Vec<AttentionBlock> = windows
            .iter()
            .zip(labels)
            .map(|(spec, label)| {
                AttentionBlock::new(store, rng, &format!("{name}.{label}"), dim, heads, mlp_ratio, Some(*spec), out_gain)
            })
            .collect();
        blocks.push(AttentionBlock::new(
            store,
            rng,
            &format!("{name}.global"),
            dim,
            heads,
            mlp_ratio,
            None,
            out_gain,
        ));
        Self { blocks }
    }

    pub fn forward<T: Real>(&self, t: &mut Tape<T>, mut x: Var, batch: usize, h: usize, w: usize) -> Result<Var> {
        for b in &self.blocks {
            x = b.forward(t, x, batch, h, w)?;
        }
        Ok(x)
    }

    pub fn zero_residual_outputs(&self, store: &mut ParamStore<f32>) {
        self.blocks.iter().for_each(|b| b.zero_residual_outputs(store));
    }
}
