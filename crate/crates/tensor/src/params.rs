use std::collections::HashMap;

use crate::error::{Result, TensorError};
use crate::graph::{Gradients, Graph, Var};
use crate::real::Real;
use crate::tensor::Tensor;

/// Index of a parameter inside a [`ParamStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
pub struct Param<T> {
    pub name: String,
    pub value: Tensor<T>,
}

/// Named model parameters, kept in registration order.
#[derive(Clone, Debug, Default)]
pub struct ParamStore<T> {
    params: Vec<Param<T>>,
    by_name: HashMap<String, usize>,
}

impl<T: Real> ParamStore<T> {
    pub fn new() -> Self {
        Self {
            params: Vec::new(),
            by_name: HashMap::new(),
        }
    }

    /// Registers a parameter. Names must be unique.
    pub fn add(&mut self, name: impl Into<String>, value: Tensor<T>) -> ParamId {
        let name = name.into();
        assert!(
            !self.by_name.contains_key(&name),
            "duplicate parameter name {name}"
        );
        let id = self.params.len();
        self.by_name.insert(name.clone(), id);
        self.params.push(Param { name, value });
        ParamId(id)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Param<T> {
        &self.params[id.0]
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor<T> {
        &mut self.params[id.0].value
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied().map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Param<T>)> {
        self.params.iter().enumerate().map(|(i, p)| (ParamId(i), p))
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn num_values(&self) -> usize {
        self.params.iter().map(|p| p.value.numel()).sum()
    }

    /// Copies every parameter of `other` with a matching name and shape.
    pub fn load_from(&mut self, other: &ParamStore<T>) -> Result<()> {
        for p in &mut self.params {
            let src = other
                .find(&p.name)
                .ok_or_else(|| TensorError::UnknownParam(p.name.clone()))?;
            let src = &other.params[src.0].value;
            if src.shape() != p.value.shape() {
                return Err(TensorError::Dimension {
                    op: "load_from",
                    detail: format!(
                        "{}: stored {:?}, expected {:?}",
                        p.name,
                        src.shape(),
                        p.value.shape()
                    ),
                });
            }
            p.value = src.clone();
        }
        Ok(())
    }

    pub fn cast<U: Real>(&self) -> ParamStore<U> {
        ParamStore {
            params: self
                .params
                .iter()
                .map(|p| Param {
                    name: p.name.clone(),
                    value: p.value.cast(),
                })
                .collect(),
            by_name: self.by_name.clone(),
        }
    }
}

/// Per-parameter gradient buffers; `None` for parameters that did not take
/// part in the loss or are frozen.
#[derive(Clone, Debug)]
pub struct ParamGrads<T> {
    pub grads: Vec<Option<Vec<T>>>,
}

impl<T: Real> ParamGrads<T> {
    pub fn empty(n: usize) -> Self {
        Self {
            grads: vec![None; n],
        }
    }

    pub fn get(&self, id: ParamId) -> Option<&[T]> {
        self.grads[id.0].as_deref()
    }

    /// Adds `other` into `self`, in parameter order.
    pub fn accumulate(&mut self, other: &ParamGrads<T>) {
        for (dst, src) in self.grads.iter_mut().zip(&other.grads) {
            if let Some(src) = src {
                match dst {
                    Some(d) => d.iter_mut().zip(src).for_each(|(a, &b)| *a += b),
                    None => *dst = Some(src.clone()),
                }
            }
        }
    }

    pub fn global_norm(&self) -> f64 {
        self.grads
            .iter()
            .flatten()
            .flat_map(|g| g.iter())
            .map(|&v| v.to_f64() * v.to_f64())
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, s: T) {
        for g in self.grads.iter_mut().flatten() {
            g.iter_mut().for_each(|v| *v *= s);
        }
    }
}

/// A graph bound to a parameter store. Parameters enter the graph lazily on
/// first use, as gradient-tracked leaves unless frozen.
pub struct Tape<'p, T: Real> {
    pub graph: Graph<T>,
    params: &'p ParamStore<T>,
    trainable: Vec<bool>,
    bound: Vec<Option<Var>>,
}

impl<'p, T: Real> Tape<'p, T> {
    /// All parameters trainable.
    pub fn new(params: &'p ParamStore<T>) -> Self {
        Self::with_trainable(params, vec![true; params.len()])
    }

    /// Parameters with `trainable[i] == false` enter as constants.
    pub fn with_trainable(params: &'p ParamStore<T>, trainable: Vec<bool>) -> Self {
        assert_eq!(trainable.len(), params.len());
        Self {
            graph: Graph::new(),
            params,
            trainable,
            bound: vec![None; params.len()],
        }
    }

    /// Inference tape: nothing tracks gradients.
    pub fn frozen(params: &'p ParamStore<T>) -> Self {
        Self::with_trainable(params, vec![false; params.len()])
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.bound[id.0] {
            return v;
        }
        let v = self
            .graph
            .leaf(self.params.get(id).value.clone(), self.trainable[id.0]);
        self.bound[id.0] = Some(v);
        v
    }

    pub fn params(&self) -> &ParamStore<T> {
        self.params
    }

    /// Runs the backward sweep and maps leaf gradients back to parameters.
    pub fn backward(&self, loss: Var) -> Result<ParamGrads<T>> {
        let mut grads: Gradients<T> = self.graph.backward(loss)?;
        let mut out = ParamGrads::empty(self.params.len());
        for (i, b) in self.bound.iter().enumerate() {
            if let (Some(v), true) = (b, self.trainable[i]) {
                out.grads[i] = grads
                    .take(*v)
                    .or_else(|| Some(vec![T::zero(); self.params.get(ParamId(i)).value.numel()]));
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frozen_params_get_no_gradient() {
        let mut store = ParamStore::<f64>::new();
        let a = store.add("a", Tensor::full(vec![2], 2.0));
        let b = store.add("b", Tensor::full(vec![2], 3.0));
        let mut tape = Tape::with_trainable(&store, vec![true, false]);
        let va = tape.param(a);
        let vb = tape.param(b);
        let p = tape.graph.mul(va, vb).unwrap();
        let s = tape.graph.sum_all(p);
        let g = tape.backward(s).unwrap();
        assert_eq!(g.get(a).unwrap(), &[3.0, 3.0]);
        assert!(g.get(b).is_none());
    }

    #[test]
    fn param_bound_once() {
        let mut store = ParamStore::<f32>::new();
        let a = store.add("a", Tensor::zeros(vec![1]));
        let mut tape = Tape::new(&store);
        let v1 = tape.param(a);
        let v2 = tape.param(a);
        assert_eq!(v1, v2);
        assert_eq!(tape.graph.len(), 1);
    }
}
