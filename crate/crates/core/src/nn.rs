//! Small building blocks: linear layers, layer norm, MLP.
//!
//! Layers hold parameter ids only; the values live in a `ParamStore` and are
//! bound per forward pass through a `Tape`, so the same layer runs in f32 or
//! f64.

use cvc_tensor::{ParamId, ParamStore, Real, Result, Tape, Tensor, Var};
use rand::Rng;

/// Rows of `x` times `weight[din×dout]` plus `bias[dout]`.
#[derive(Clone, Debug)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
    pub din: usize,
    pub dout: usize,
}

impl Linear {
    /// Uniform init with variance 1/din, zero bias.
    pub fn new(store: &mut ParamStore<f32>, rng: &mut impl Rng, name: &str, din: usize, dout: usize) -> Self {
        Self::with_gain(store, rng, name, din, dout, 1.0)
    }

    pub fn with_gain(
        store: &mut ParamStore<f32>,
        rng: &mut impl Rng,
        name: &str,
        din: usize,
        dout: usize,
        gain: f64,
    ) -> Self {
        let a = gain * (3.0 / din as f64).sqrt();
        let w = Tensor::from_fn(vec![din, dout], |_| rng.gen_range(-a..=a) as f32);
        let weight = store.add(format!("{name}.weight"), w);
        let bias = store.add(format!("{name}.bias"), Tensor::zeros(vec![dout]));
        Self {
            weight,
            bias,
            din,
            dout,
        }
    }

    pub fn forward<T: Real>(&self, t: &mut Tape<T>, x: Var) -> Result<Var> {
        let w = t.param(self.weight);
        let b = t.param(self.bias);
        let rows = t.graph.shape(x)[0];
        let y = t.graph.matmul(x, w)?;
        let bb = t.graph.expand_rows(b, rows)?;
        t.graph.add(y, bb)
    }

    pub fn zero(&self, store: &mut ParamStore<f32>) {
        store.value_mut(self.weight).data_mut().fill(0.0);
        store.value_mut(self.bias).data_mut().fill(0.0);
    }
}

pub const LAYERNORM_EPS: f64 = 1e-5;

#[derive(Clone, Debug)]
pub struct LayerNorm {
    pub gain: ParamId,
    pub bias: ParamId,
}

impl LayerNorm {
    pub fn new(store: &mut ParamStore<f32>, name: &str, dim: usize) -> Self {
        Self {
            gain: store.add(format!("{name}.gain"), Tensor::full(vec![dim], 1.0)),
            bias: store.add(format!("{name}.bias"), Tensor::zeros(vec![dim])),
        }
    }

    pub fn forward<T: Real>(&self, t: &mut Tape<T>, x: Var) -> Result<Var> {
        let g = t.param(self.gain);
        let b = t.param(self.bias);
        t.graph.layernorm(x, g, b, LAYERNORM_EPS)
    }
}

/// Two-layer perceptron with a GELU in between.
#[derive(Clone, Debug)]
pub struct Mlp {
    pub fc1: Linear,
    pub fc2: Linear,
}

impl Mlp {
    pub fn new(store: &mut ParamStore<f32>, rng: &mut impl Rng, name: &str, dim: usize, hidden: usize, out_gain: f64) -> Self {
        Self {
            fc1: Linear::new(store, rng, &format!("{name}.fc1"), dim, hidden),
            fc2: Linear::with_gain(store, rng, &format!("{name}.fc2"), hidden, dim, out_gain),
        }
    }

    pub fn forward<T: Real>(&self, t: &mut Tape<T>, x: Var) -> Result<Var> {
        let h = self.fc1.forward(t, x)?;
        let h = t.graph.gelu(h);
        self.fc2.forward(t, h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn layernorm_normalises_rows() {
        let mut store = ParamStore::new();
        let ln = LayerNorm::new(&mut store, "ln", 6);
        let mut t = Tape::<f32>::frozen(&store);
        let x = t
            .graph
            .constant(Tensor::from_fn(vec![3, 6], |i| (i * i) as f32 * 0.1 - 2.0));
        let y = ln.forward(&mut t, x).unwrap();
        for row in t.graph.value(y).data().chunks(6) {
            let m = row.iter().sum::<f32>() / 6.0;
            let v = row.iter().map(|a| (a - m).powi(2)).sum::<f32>() / 6.0;
            assert!(m.abs() < 1e-5);
            assert!((v - 1.0).abs() < 1e-3);
        }
        let c = t.graph.constant(Tensor::full(vec![1, 6], 4.0));
        let y = ln.forward(&mut t, c).unwrap();
        assert!(t.graph.value(y).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_applies_bias() {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let lin = Linear::new(&mut store, &mut rng, "l", 3, 2);
        store.value_mut(lin.weight).data_mut().fill(0.0);
        store.value_mut(lin.bias).data_mut().copy_from_slice(&[1.0, -2.0]);
        let mut t = Tape::<f32>::frozen(&store);
        let x = t.graph.constant(Tensor::full(vec![4, 3], 7.0));
        let y = lin.forward(&mut t, x).unwrap();
        assert_eq!(t.graph.value(y).data(), &[1.0, -2.0, 1.0, -2.0, 1.0, -2.0, 1.0, -2.0]);
    }
}
