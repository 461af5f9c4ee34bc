use std::sync::Arc;

use cvc_tensor::gradcheck::check_gradients;
use cvc_tensor::{Graph, Tensor};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-4;
const EPS: f64 = 1e-6;

fn random(rng: &mut ChaCha8Rng, shape: Vec<usize>) -> Tensor<f64> {
    Tensor::from_fn(shape, |_| rng.gen_range(-1.5..1.5))
}

fn positive(rng: &mut ChaCha8Rng, shape: Vec<usize>) -> Tensor<f64> {
    Tensor::from_fn(shape, |_| rng.gen_range(0.3..2.0))
}

fn assert_all_below(errs: &[f64], what: &str) {
    for (i, e) in errs.iter().enumerate() {
        assert!(*e < TOL, "{what}: input {i} relative error {e:e}");
    }
}

// Weighted sum so the upstream gradient is not uniform.
fn weighted_sum(g: &mut Graph<f64>, v: cvc_tensor::Var) -> cvc_tensor::Result<cvc_tensor::Var> {
    let n = g.value(v).numel();
    let w = g.constant(
        Tensor::from_fn(vec![n], |i| 0.5 + (i as f64 * 0.77).sin()).reshaped(g.shape(v).to_vec())?,
    );
    let p = g.mul(v, w)?;
    Ok(g.sum_all(p))
}

#[test]
fn matmul_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = random(&mut rng, vec![3, 4]);
    let b = random(&mut rng, vec![4, 5]);
    let errs = check_gradients(&[a, b], EPS, |g, v| {
        let p = g.matmul(v[0], v[1])?;
        weighted_sum(g, p)
    })
    .unwrap();
    assert_all_below(&errs, "matmul");

    // gradient of sum(A·B) specifically
    let a = random(&mut rng, vec![2, 3]);
    let b = random(&mut rng, vec![3, 2]);
    let errs = check_gradients(&[a, b], EPS, |g, v| {
        let p = g.matmul(v[0], v[1])?;
        Ok(g.sum_all(p))
    })
    .unwrap();
    assert_all_below(&errs, "sum(matmul)");
}

#[test]
fn bmm_gradients_both_layouts() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for trans_b in [false, true] {
        let a = random(&mut rng, vec![2, 3, 4]);
        let b = if trans_b {
            random(&mut rng, vec![2, 5, 4])
        } else {
            random(&mut rng, vec![2, 4, 5])
        };
        let errs = check_gradients(&[a, b], EPS, |g, v| {
            let p = g.bmm(v[0], v[1], trans_b)?;
            weighted_sum(g, p)
        })
        .unwrap();
        assert_all_below(&errs, "bmm");
    }
}

#[test]
fn softmax_gradients_every_axis() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for axis in 0..3 {
        let x = random(&mut rng, vec![2, 3, 4]);
        let errs = check_gradients(&[x], EPS, |g, v| {
            let s = g.softmax(v[0], axis)?;
            weighted_sum(g, s)
        })
        .unwrap();
        assert_all_below(&errs, "softmax");
    }
}

#[test]
fn layernorm_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x = random(&mut rng, vec![3, 6]);
    let gain = random(&mut rng, vec![6]);
    let bias = random(&mut rng, vec![6]);
    let errs = check_gradients(&[x, gain, bias], EPS, |g, v| {
        let y = g.layernorm(v[0], v[1], v[2], 1e-5)?;
        weighted_sum(g, y)
    })
    .unwrap();
    assert_all_below(&errs, "layernorm");
}

#[test]
fn elementwise_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = random(&mut rng, vec![4, 3]);
    let b = random(&mut rng, vec![4, 3]);
    let p = positive(&mut rng, vec![4, 3]);
    let errs = check_gradients(&[a, b, p], EPS, |g, v| {
        let s = g.add(v[0], v[1])?;
        let d = g.sub(s, v[1])?;
        let m = g.mul(d, v[1])?;
        let e = g.exp(m);
        let l = g.log(v[2]);
        let q = g.square(l);
        let sp = g.softplus(v[0]);
        let ge = g.gelu(v[1]);
        let sc = g.scale(ge, 1.7);
        let sh = g.add_scalar(sc, -0.3);
        let t1 = g.add(e, q)?;
        let t2 = g.mul(sp, sh)?;
        let t = g.add(t1, t2)?;
        weighted_sum(g, t)
    })
    .unwrap();
    assert_all_below(&errs, "elementwise");
}

#[test]
fn clamp_gradient_inside_and_outside() {
    let x = Tensor::new(vec![4], vec![-3.0, -0.5, 0.5, 3.0]).unwrap();
    let errs = check_gradients(&[x], EPS, |g, v| {
        let c = g.clamp(v[0], -1.0, 1.0);
        weighted_sum(g, c)
    })
    .unwrap();
    assert_all_below(&errs, "clamp");
}

#[test]
fn gather_expand_reshape_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let x = random(&mut rng, vec![2, 3]);
    let b = random(&mut rng, vec![3]);
    let index: Arc<[usize]> = vec![5, 0, 0, 3, 2, 1, 4, 4].into();
    let errs = check_gradients(&[x, b], EPS, |g, v| {
        let e = g.expand_rows(v[1], 2)?;
        let s = g.add(v[0], e)?;
        let r = g.reshape(s, vec![6])?;
        let gathered = g.gather(r, index.clone(), vec![2, 4])?;
        weighted_sum(g, gathered)
    })
    .unwrap();
    assert_all_below(&errs, "gather");
}

#[test]
fn gaussian_bits_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let value = random(&mut rng, vec![8]);
    let mean = random(&mut rng, vec![8]);
    let scale = positive(&mut rng, vec![8]);
    let errs = check_gradients(&[value, mean, scale], EPS, |g, v| {
        let b = g.gaussian_bits(v[0], v[1], v[2], 1e-12)?;
        weighted_sum(g, b)
    })
    .unwrap();
    assert_all_below(&errs, "gaussian_bits");
}

#[test]
fn forward_is_deterministic() {
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut g = Graph::<f32>::new();
        let a = g.constant(Tensor::from_fn(vec![8, 8], |_| rng.gen()));
        let b = g.constant(Tensor::from_fn(vec![8, 8], |_| rng.gen()));
        let p = g.matmul(a, b).unwrap();
        let s = g.softmax(p, 1).unwrap();
        g.value(s).data().to_vec()
    };
    let (x, y) = (run(), run());
    assert!(x.iter().zip(&y).all(|(a, b)| a.to_bits() == b.to_bits()));
}

proptest! {
    #[test]
    fn softmax_rows_sum_to_one(values in prop::collection::vec(-50.0f32..50.0, 12)) {
        let mut g = Graph::<f32>::new();
        let x = g.constant(Tensor::new(vec![3, 4], values).unwrap());
        let s = g.softmax(x, 1).unwrap();
        for row in g.value(s).data().chunks(4) {
            let total: f32 = row.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-6);
            prop_assert!(row.iter().all(|&p| p >= 0.0));
        }
    }
}
