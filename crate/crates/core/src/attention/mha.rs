use std::sync::Arc;

use cvc_tensor::{Graph, ParamStore, Real, Result, Tape, Var};
use rand::Rng;

use crate::nn::Linear;

/// softmax(Q·Kᵀ/√d)·V for `[G, n, d]` operands, independently per group.
pub fn attention<T: Real>(g: &mut Graph<T>, q: Var, k: Var, v: Var) -> Result<Var> {
    let d = g.shape(q)[2];
    let scores = g.bmm(q, k, true)?;
    let scores = g.scale(scores, T::from_f64(1.0 / (d as f64).sqrt()));
    let weights = g.softmax(scores, 2)?;
    g.bmm(weights, v, false)
}

/// Index turning `[G·n, h·dk]` rows into `[G·h, n, dk]` head-major blocks.
fn split_heads_index(groups: usize, n: usize, heads: usize, dk: usize) -> Vec<usize> {
    let d = heads * dk;
    let mut idx = Vec::with_capacity(groups * n * d);
    for gi in 0..groups {
        for hh in 0..heads {
            for i in 0..n {
                let base = (gi * n + i) * d + hh * dk;
                idx.extend(base..base + dk);
            }
        }
    }
    idx
}

#[derive(Clone, Debug)]
pub struct MultiHeadAttention {
    pub q: Linear,
    pub k: Linear,
    pub v: Linear,
    pub out: Linear,
    pub heads: usize,
    pub dim: usize,
}

impl MultiHeadAttention {
    pub fn new(store: &mut ParamStore<f32>, rng: &mut impl Rng, name: &str, dim: usize, heads: usize, out_gain: f64) -> Self {
        assert!(heads > 0 && dim % heads == 0, "token dim {dim} not divisible by {heads} heads");
        Self {
            q: Linear::new(store, rng, &format!("{name}.q"), dim, dim),
            k: Linear::new(store, rng, &format!("{name}.k"), dim, dim),
            v: Linear::new(store, rng, &format!("{name}.v"), dim, dim),
            out: Linear::with_gain(store, rng, &format!("{name}.out"), dim, dim, out_gain),
            heads,
            dim,
        }
    }

    /// `x` is `[groups·n, dim]`; attention runs within each group of `n`
    /// consecutive rows.
    pub fn forward<T: Real>(&self, t: &mut Tape<T>, x: Var, groups: usize) -> Result<Var> {
        let rows = t.graph.shape(x)[0];
        let n = rows / groups;
        let dk = self.dim / self.heads;
        let split: Arc<[usize]> = split_heads_index(groups, n, self.heads, dk).into();
        let shape = vec![groups * self.heads, n, dk];
        let q = self.q.forward(t, x)?;
        let k = self.k.forward(t, x)?;
        let v = self.v.forward(t, x)?;
        let q = t.graph.gather(q, split.clone(), shape.clone())?;
        let k = t.graph.gather(k, split.clone(), shape.clone())?;
        let v = t.graph.gather(v, split.clone(), shape)?;
        let heads = attention(&mut t.graph, q, k, v)?;
        let merge: Arc<[usize]> = super::window::invert(&split).into();
        let merged = t.graph.gather(heads, merge, vec![rows, self.dim])?;
        self.out.forward(t, merged)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cvc_tensor::Tensor;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn split_then_merge_is_identity() {
        let idx = split_heads_index(3, 5, 2, 4);
        let mut seen = idx.clone();
        seen.sort();
        assert_eq!(seen, (0..120).collect::<Vec<_>>());
    }

    #[test]
    fn single_token_returns_value_row() {
        let mut g = Graph::<f64>::new();
        let q = g.constant(Tensor::new(vec![1, 1, 3], vec![1.0, 2.0, 3.0]).unwrap());
        let k = g.constant(Tensor::new(vec![1, 1, 3], vec![-1.0, 0.5, 9.0]).unwrap());
        let v = g.constant(Tensor::new(vec![1, 1, 3], vec![4.0, 5.0, 6.0]).unwrap());
        let o = attention(&mut g, q, k, v).unwrap();
        assert_eq!(g.value(o).data(), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn output_shape_preserved_for_all_head_counts() {
        for heads in [1, 2, 4, 8] {
            let mut store = ParamStore::new();
            let mut rng = ChaCha8Rng::seed_from_u64(heads as u64);
            let mha = MultiHeadAttention::new(&mut store, &mut rng, "a", 8, heads, 1.0);
            let mut t = Tape::<f32>::frozen(&store);
            let x = t.graph.constant(Tensor::from_fn(vec![12, 8], |i| (i as f32).cos()));
            let y = mha.forward(&mut t, x, 3).unwrap();
            assert_eq!(t.graph.shape(y), &[12, 8]);
        }
    }
}
