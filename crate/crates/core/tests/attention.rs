use cvc::attention::{attention, AttentionBlock, MultiHeadAttention, WindowKind, WindowSpec};
use cvc::attention::window::{invert, window_merge, window_partition};
use cvc_tensor::{Graph, ParamStore, Tape, Tensor};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: usize = 8;
const W: usize = 16;
const D: usize = 8;

fn specs() -> [WindowSpec; 3] {
    [
        WindowSpec::new(WindowKind::Square, 4, 4).unwrap(),
        WindowSpec::new(WindowKind::EastWest, 2, 8).unwrap(),
        WindowSpec::new(WindowKind::NorthSouth, 8, 2).unwrap(),
    ]
}

fn tokens(seed: u64, batch: usize) -> Tensor<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor::from_fn(vec![batch * H * W, D], |_| rng.gen_range(-1.0..1.0))
}

fn block(window: Option<WindowSpec>) -> (ParamStore<f32>, AttentionBlock) {
    let mut store = ParamStore::new();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let b = AttentionBlock::new(&mut store, &mut rng, "blk", D, 2, 2, window, 1.0);
    (store, b)
}

fn run_block(store: &ParamStore<f32>, b: &AttentionBlock, x: &Tensor<f64>, batch: usize) -> Vec<f64> {
    let cast = store.cast::<f64>();
    let mut t = Tape::frozen(&cast);
    let v = t.graph.constant(x.clone());
    let y = b.forward(&mut t, v, batch, H, W).unwrap();
    t.graph.value(y).data().to_vec()
}

fn window_of(spec: &WindowSpec, row: usize, col: usize) -> (usize, usize) {
    (row / spec.win_h, col / spec.win_w)
}

#[test]
fn window_outputs_depend_only_on_their_window() {
    for spec in specs() {
        let (store, b) = block(Some(spec));
        let x = tokens(1, 1);
        let base = run_block(&store, &b, &x, 1);
        // perturb one token and check which outputs move
        let (pr, pc) = (5, 9);
        let mut xp = x.clone();
        for k in 0..D {
            xp.data_mut()[(pr * W + pc) * D + k] += 0.1 * (k * k) as f64;
        }
        let moved = run_block(&store, &b, &xp, 1);
        for r in 0..H {
            for c in 0..W {
                let off = (r * W + c) * D;
                let changed = (0..D).any(|k| base[off + k] != moved[off + k]);
                let same_window = window_of(&spec, r, c) == window_of(&spec, pr, pc);
                assert_eq!(changed, same_window, "{:?} token ({r},{c})", spec.kind);
            }
        }
    }
}

#[test]
fn global_attention_couples_every_token() {
    let (store, b) = block(None);
    let x = tokens(2, 1);
    let base = run_block(&store, &b, &x, 1);
    let mut xp = x.clone();
    xp.data_mut()[0] += 0.5; // one component, so layer norm cannot cancel it
    let moved = run_block(&store, &b, &xp, 1);
    for tok in 0..H * W {
        assert!((0..D).any(|k| base[tok * D + k] != moved[tok * D + k]), "token {tok} unaffected");
    }
}

#[test]
fn batch_elements_do_not_interact() {
    let (store, b) = block(None);
    let x = tokens(3, 2);
    let base = run_block(&store, &b, &x, 2);
    let mut xp = x.clone();
    xp.data_mut()[H * W * D + 3] += 1.0;
    let moved = run_block(&store, &b, &xp, 2);
    assert_eq!(&base[..H * W * D], &moved[..H * W * D]);
}

/// Plain-loop multi-head attention on one group of `n` tokens.
fn brute_mha(x: &[f64], n: usize, heads: usize, wq: &[f64], bq: &[f64], wk: &[f64], bk: &[f64], wv: &[f64], bv: &[f64], wo: &[f64], bo: &[f64]) -> Vec<f64> {
    let proj = |w: &[f64], b: &[f64]| {
        let mut out = vec![0.0; n * D];
        for i in 0..n {
            for o in 0..D {
                let mut acc = b[o];
                for k in 0..D {
                    acc += x[i * D + k] * w[k * D + o];
                }
                out[i * D + o] = acc;
            }
        }
        out
    };
    let (q, k, v) = (proj(wq, bq), proj(wk, bk), proj(wv, bv));
    let dk = D / heads;
    let mut merged = vec![0.0; n * D];
    for h in 0..heads {
        for i in 0..n {
            let scores: Vec<f64> = (0..n)
                .map(|j| (0..dk).map(|c| q[i * D + h * dk + c] * k[j * D + h * dk + c]).sum::<f64>() / (dk as f64).sqrt())
                .collect();
            let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
            let z: f64 = e.iter().sum();
            for c in 0..dk {
                merged[i * D + h * dk + c] = (0..n).map(|j| e[j] / z * v[j * D + h * dk + c]).sum();
            }
        }
    }
    let mut out = vec![0.0; n * D];
    for i in 0..n {
        for o in 0..D {
            out[i * D + o] = bo[o] + (0..D).map(|k| merged[i * D + k] * wo[k * D + o]).sum::<f64>();
        }
    }
    out
}

#[test]
fn multi_head_attention_matches_brute_force() {
    let mut store = ParamStore::new();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mha = MultiHeadAttention::new(&mut store, &mut rng, "m", D, 2, 1.0);
    // nonzero biases so they are exercised
    for lin in [&mha.q, &mha.k, &mha.v, &mha.out] {
        for b in store.value_mut(lin.bias).data_mut() {
            *b = rng.gen_range(-0.3..0.3);
        }
    }
    let groups = 3;
    let n = 6;
    let x: Vec<f64> = (0..groups * n * D).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let cast = store.cast::<f64>();
    let mut t = Tape::frozen(&cast);
    let v = t.graph.constant(Tensor::new(vec![groups * n, D], x.clone()).unwrap());
    let y = mha.forward(&mut t, v, groups).unwrap();
    let got = t.graph.value(y).data().to_vec();
    let p = |id| cast.get(id).value.data().to_vec();
    for g in 0..groups {
        let want = brute_mha(
            &x[g * n * D..(g + 1) * n * D],
            n,
            2,
            &p(mha.q.weight),
            &p(mha.q.bias),
            &p(mha.k.weight),
            &p(mha.k.bias),
            &p(mha.v.weight),
            &p(mha.v.bias),
            &p(mha.out.weight),
            &p(mha.out.bias),
        );
        for (a, b) in got[g * n * D..(g + 1) * n * D].iter().zip(&want) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }
}

#[test]
fn sharp_scores_select_the_best_matching_value() {
    let n = 5;
    let mut g = Graph::<f64>::new();
    // query aligned with key 3 only, scaled so softmax saturates
    let mut kd = vec![0.0; n * 2];
    for j in 0..n {
        kd[j * 2] = if j == 3 { 1.0 } else { -1.0 };
    }
    let q = g.constant(Tensor::new(vec![1, 1, 2], vec![1e4, 0.0]).unwrap());
    let k = g.constant(Tensor::new(vec![1, n, 2], kd).unwrap());
    let v = g.constant(Tensor::from_fn(vec![1, n, 2], |i| i as f64));
    let o = attention(&mut g, q, k, v).unwrap();
    assert_eq!(g.value(o).data().to_vec(), vec![6.0, 7.0]);
}

#[test]
fn zeroed_residual_outputs_make_blocks_identity() {
    for window in specs().into_iter().map(Some).chain([None]) {
        let (mut store, b) = block(window);
        b.zero_residual_outputs(&mut store);
        let x = tokens(9, 2);
        assert_eq!(run_block(&store, &b, &x, 2), x.data().to_vec());
    }
}

#[test]
fn score_count_is_linear_in_tokens_for_windows() {
    for spec in specs() {
        let (_, b) = block(Some(spec));
        let per = |h: usize, w: usize| b.score_count(h, w) as f64 / (h * w) as f64;
        // doubling the grid doubles the number of scores
        assert_eq!(per(H, W), per(2 * H, 2 * W));
        assert_eq!(b.score_count(H, W), spec.count(H, W) * spec.tokens().pow(2));
    }
    let (_, g) = block(None);
    assert_eq!(g.score_count(H, W), (H * W).pow(2));
}

proptest! {
    #[test]
    fn partition_then_merge_is_bitwise_identity(
        kind in 0usize..3, scale_h in 1usize..4, scale_w in 1usize..3, batch in 1usize..3, seed in any::<u64>()
    ) {
        let spec = specs()[kind];
        let (h, w) = (8 * scale_h, 16 * scale_w);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = Tensor::from_fn(vec![batch * h * w, 3], |_| rng.gen::<f32>());
        let mut g = Graph::<f32>::new();
        let x = g.constant(data.clone());
        let p = window_partition(&mut g, x, batch, h, w, &spec).unwrap();
        let m = window_merge(&mut g, p, batch, h, w, &spec).unwrap();
        prop_assert_eq!(g.value(m), &data);
        let rows = spec.partition_rows(batch, h, w);
        prop_assert_eq!(invert(&invert(&rows)), rows);
    }

    #[test]
    fn attention_rows_are_convex_combinations(values in prop::collection::vec(-20.0f64..20.0, 24)) {
        let mut g = Graph::<f64>::new();
        let q = g.constant(Tensor::new(vec![1, 4, 2], values[..8].to_vec()).unwrap());
        let k = g.constant(Tensor::new(vec![1, 4, 2], values[8..16].to_vec()).unwrap());
        let v = g.constant(Tensor::new(vec![1, 4, 2], values[16..].to_vec()).unwrap());
        let o = attention(&mut g, q, k, v).unwrap();
        let vv = &values[16..];
        for (i, val) in g.value(o).data().to_vec().iter().enumerate() {
            let c = i % 2;
            let lo = (0..4).map(|j| vv[j * 2 + c]).fold(f64::INFINITY, f64::min);
            let hi = (0..4).map(|j| vv[j * 2 + c]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(*val >= lo - 1e-9 && *val <= hi + 1e-9);
        }
    }
}
