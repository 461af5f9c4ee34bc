//! Training-time noise proxy and inference-time rounding.

use cvc_tensor::{Graph, Real, Result, Tensor, Var};
use rand::Rng;

/// `v + u` with `u ~ U(−½, ½)` per element; the gradient passes through.
pub fn quantize_train<T: Real>(g: &mut Graph<T>, v: Var, rng: &mut impl Rng) -> Result<Var> {
    let shape = g.shape(v).to_vec();
    let noise = Tensor::from_fn(shape, |_| T::from_f64(rng.gen::<f64>() - 0.5));
    let u = g.constant(noise);
    g.add(v, u)
}

/// Rounded symbols and the number of elements that had to be clamped.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Quantized {
    pub symbols: Vec<i32>,
    pub clamped: usize,
}

/// Round half to even, then clamp to `[s_min, s_max]`. Non-finite inputs
/// become 0 and count as clamped.
pub fn quantize_infer(values: &[f32], s_min: i32, s_max: i32) -> Quantized {
    let mut clamped = 0;
    let symbols = values
        .iter()
        .map(|&v| {
            if !v.is_finite() {
                clamped += 1;
                return 0;
            }
            let r = v.round_ties_even();
            if r < s_min as f32 {
                clamped += 1;
                s_min
            } else if r > s_max as f32 {
                clamped += 1;
                s_max
            } else {
                r as i32
            }
        })
        .collect();
    Quantized { symbols, clamped }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rounding_rule_and_clamping() {
        let q = quantize_infer(&[0.5, 1.5, -2.3, 2.5, -0.5, 300.0, -1e9], -128, 127);
        assert_eq!(q.symbols, vec![0, 2, -2, 2, 0, 127, -128]);
        assert_eq!(q.clamped, 2);
    }

    #[test]
    fn noise_is_bounded_and_gradient_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut g = Graph::<f64>::new();
        let v = g.leaf(Tensor::from_fn(vec![1000], |i| i as f64 * 0.01), true);
        let q = quantize_train(&mut g, v, &mut rng).unwrap();
        for (a, b) in g.value(q).data().iter().zip(g.value(v).data()) {
            let d = a - b;
            assert!((-0.5..0.5).contains(&d));
        }
        let s = g.sum_all(q);
        let grads = g.backward(s).unwrap();
        assert!(grads.get(v).unwrap().iter().all(|&x| x == 1.0));
    }
}
