//! Central finite-difference checks for analytic gradients (64-bit).

use crate::error::Result;
use crate::graph::{Graph, Var};
use crate::tensor::Tensor;

/// Norm-wise relative error `‖a − b‖ / max(‖a‖, ‖b‖)`; zero when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let denom = na.max(nb);
    if denom < 1e-300 {
        0.0
    } else {
        diff / denom
    }
}

/// Compares backward-pass gradients of the scalar built by `f` against
/// central differences with step `eps`, one relative error per input.
pub fn check_gradients<F>(inputs: &[Tensor<f64>], eps: f64, f: F) -> Result<Vec<f64>>
where
    F: Fn(&mut Graph<f64>, &[Var]) -> Result<Var>,
{
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.leaf(t.clone(), true)).collect();
    let loss = f(&mut g, &vars)?;
    let grads = g.backward(loss)?;

    let eval = |perturbed: &[Tensor<f64>]| -> Result<f64> {
        let mut g = Graph::new();
        let vars: Vec<Var> = perturbed.iter().map(|t| g.leaf(t.clone(), false)).collect();
        let loss = f(&mut g, &vars)?;
        Ok(g.value(loss).item())
    };

    let mut errors = Vec::with_capacity(inputs.len());
    let mut work: Vec<Tensor<f64>> = inputs.to_vec();
    for (i, input) in inputs.iter().enumerate() {
        let analytic = grads
            .get(vars[i])
            .map(|g| g.to_vec())
            .unwrap_or_else(|| vec![0.0; input.numel()]);
        let mut numeric = vec![0.0; input.numel()];
        for j in 0..input.numel() {
            let orig = input.data()[j];
            work[i].data_mut()[j] = orig + eps;
            let up = eval(&work)?;
            work[i].data_mut()[j] = orig - eps;
            let down = eval(&work)?;
            work[i].data_mut()[j] = orig;
            numeric[j] = (up - down) / (2.0 * eps);
        }
        errors.push(relative_error(&analytic, &numeric));
    }
    Ok(errors)
}
