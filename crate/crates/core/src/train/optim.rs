use cvc_tensor::{ParamGrads, ParamStore};

/// Adam with decoupled weight decay.
#[derive(Clone, Debug)]
pub struct AdamW {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    m: Vec<Vec<f32>>,
    v: Vec<Vec<f32>>,
    /// Per-parameter update counts; frozen parameters never advance.
    t: Vec<u64>,
    decay: Vec<bool>,
}

impl AdamW {
    /// Weight decay applies to matrices only, not to biases or norm gains.
    pub fn new(params: &ParamStore<f32>, weight_decay: f64) -> Self {
        let decay = params.iter().map(|(_, p)| p.value.rank() >= 2).collect();
        Self::with_decay_mask(params, weight_decay, decay)
    }

    pub fn with_decay_mask(params: &ParamStore<f32>, weight_decay: f64, decay: Vec<bool>) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            m: params.iter().map(|(_, p)| vec![0.0; p.value.numel()]).collect(),
            v: params.iter().map(|(_, p)| vec![0.0; p.value.numel()]).collect(),
            t: vec![0; params.len()],
            decay,
        }
    }

    /// Updates every parameter that has a gradient; the rest stay untouched
    /// bit for bit.
    pub fn step(&mut self, params: &mut ParamStore<f32>, grads: &ParamGrads<f32>, lr: f64) {
        let ids: Vec<_> = params.ids().collect();
        for (i, id) in ids.into_iter().enumerate() {
            let Some(g) = grads.grads[i].as_deref() else {
                continue;
            };
            self.t[i] += 1;
            let t = self.t[i] as i32;
            let bc1 = 1.0 - self.beta1.powi(t);
            let bc2 = 1.0 - self.beta2.powi(t);
            let shrink = if self.decay[i] {
                1.0 - lr * self.weight_decay
            } else {
                1.0
            };
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            let w = params.value_mut(id).data_mut();
            for k in 0..w.len() {
                let gk = g[k] as f64;
                let mk = self.beta1 * m[k] as f64 + (1.0 - self.beta1) * gk;
                let vk = self.beta2 * v[k] as f64 + (1.0 - self.beta2) * gk * gk;
                m[k] = mk as f32;
                v[k] = vk as f32;
                let update = lr * (mk / bc1) / ((vk / bc2).sqrt() + self.eps);
                w[k] = (w[k] as f64 * shrink - update) as f32;
            }
        }
    }

    /// Moments and step counts, for checkpointing.
    pub fn state(&self) -> (&[Vec<f32>], &[Vec<f32>], &[u64]) {
        (&self.m, &self.v, &self.t)
    }

    pub fn restore(&mut self, m: Vec<Vec<f32>>, v: Vec<Vec<f32>>, t: Vec<u64>) -> bool {
        let ok = m.len() == self.m.len()
            && v.len() == self.v.len()
            && t.len() == self.t.len()
            && m.iter().zip(&self.m).all(|(a, b)| a.len() == b.len())
            && v.iter().zip(&self.v).all(|(a, b)| a.len() == b.len());
        if ok {
            self.m = m;
            self.v = v;
            self.t = t;
        }
        ok
    }
}
