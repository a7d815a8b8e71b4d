use indexmap::IndexMap;

use super::tensor::{Gradients, ParameterStore};
use crate::error::{Error, Result};

/// Compares analytic gradients with central differences.
///
/// `objective` evaluates the loss and its analytic gradients for a given
/// parameter store. Returns, per parameter tensor, the maximum of
/// `|analytic − numeric| / max(1, |analytic|, |numeric|)` over its entries.
pub fn grad_check<F>(objective: F, params: &ParameterStore, epsilon: f64) -> Result<IndexMap<String, f64>>
where
    F: Fn(&ParameterStore) -> Result<(f64, Gradients)>,
{
    if !(1e-7..=1e-3).contains(&epsilon) {
        return Err(Error::Config(format!("grad_check epsilon {epsilon} outside [1e-7, 1e-3]")));
    }
    let (base, analytic) = objective(params)?;
    if !base.is_finite() {
        return Err(Error::NonFinite(format!("objective evaluated to {base}")));
    }
    let mut probe = params.clone();
    let mut report = IndexMap::new();
    for (id, name, tensor) in params.iter() {
        let analytic = analytic.get(id);
        let mut worst: f64 = 0.0;
        for i in 0..tensor.len() {
            let original = tensor.values()[i];
            probe.get_mut(id).values_mut()[i] = original + epsilon;
            let (plus, _) = objective(&probe)?;
            probe.get_mut(id).values_mut()[i] = original - epsilon;
            let (minus, _) = objective(&probe)?;
            probe.get_mut(id).values_mut()[i] = original;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::NonFinite(format!("objective non-finite while perturbing {name}[{i}]")));
            }
            let numeric = (plus - minus) / (2.0 * epsilon);
            let a = analytic.map_or(0.0, |g| g[i]);
            let rel = (a - numeric).abs() / 1f64.max(a.abs()).max(numeric.abs());
            worst = worst.max(rel);
        }
        report.insert(name.to_string(), worst);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffcore::{Graph, Tensor};

    fn square(params: &ParameterStore) -> Result<(f64, Gradients)> {
        let mut g = Graph::new(params);
        let w = g.param(params.require("w")?);
        let y = g.mul(w, w);
        let loss = g.sum(y);
        Ok((g.scalar(loss), g.backward(loss)))
    }

    #[test]
    fn quadratic() {
        let mut params = ParameterStore::new(0);
        params.insert("w", Tensor::scalar(3.0)).unwrap();
        let (_, grads) = square(&params).unwrap();
        assert_eq!(grads.get(params.id("w").unwrap()).unwrap(), &[6.0]);
        let report = grad_check(square, &params, 1e-5).unwrap();
        assert!(report["w"] < 1e-8);
    }

    #[test]
    fn constant_objective() {
        let mut params = ParameterStore::new(0);
        params.insert("w", Tensor::scalar(3.0)).unwrap();
        let report = grad_check(|p| Ok((2.5, Gradients::zeros_like(p))), &params, 1e-5).unwrap();
        assert_eq!(report["w"], 0.0);
    }

    #[test]
    fn non_finite_objective_rejected() {
        let mut params = ParameterStore::new(0);
        params.insert("w", Tensor::scalar(3.0)).unwrap();
        let r = grad_check(|p| Ok((f64::NAN, Gradients::zeros_like(p))), &params, 1e-5);
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }
}
