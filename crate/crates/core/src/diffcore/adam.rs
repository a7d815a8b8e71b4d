use super::tensor::{Gradients, ParameterStore};
use crate::error::{Error, Result};

pub const DEFAULT_LEARNING_RATE: f64 = 0.001;

/// First/second moment estimates for every parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub step_count: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(params: &ParameterStore, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        let zeros: Vec<Vec<f64>> = params.iter().map(|(_, _, t)| vec![0.0; t.len()]).collect();
        AdamState {
            m: zeros.clone(),
            v: zeros,
            step_count: 0,
            beta1,
            beta2,
            epsilon,
        }
    }

    pub fn with_defaults(params: &ParameterStore) -> Self {
        AdamState::new(params, 0.9, 0.999, 1e-8)
    }
}

/// One bias-corrected Adam update in place. Parameters without a gradient
/// buffer are updated as if their gradient were zero.
pub fn adam_step(
    params: &mut ParameterStore,
    grads: &Gradients,
    state: &mut AdamState,
    learning_rate: f64,
) -> Result<()> {
    if !(learning_rate > 0.0) {
        return Err(Error::Config(format!("learning rate must be positive, got {learning_rate}")));
    }
    if state.m.len() != params.len() {
        return Err(Error::Shape(format!(
            "optimizer state tracks {} parameters, store has {}",
            state.m.len(),
            params.len()
        )));
    }
    for (id, name, tensor) in params.iter() {
        let expected = tensor.len();
        if let Some(g) = grads.get(id) {
            if g.len() != expected {
                return Err(Error::GradientShape {
                    name: name.to_string(),
                    expected,
                    actual: g.len(),
                });
            }
        }
        if state.m[id.index()].len() != expected {
            return Err(Error::GradientShape {
                name: name.to_string(),
                expected,
                actual: state.m[id.index()].len(),
            });
        }
    }

    state.step_count += 1;
    let t = state.step_count as i32;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.epsilon);
    let bc1 = 1.0 - b1.powi(t);
    let bc2 = 1.0 - b2.powi(t);
    let ids: Vec<_> = params.iter().map(|(id, _, _)| id).collect();
    for id in ids {
        let g = grads.get(id);
        let m = &mut state.m[id.index()];
        let v = &mut state.v[id.index()];
        let w = params.get_mut(id).values_mut();
        for i in 0..w.len() {
            let gi = g.map_or(0.0, |g| g[i]);
            m[i] = b1 * m[i] + (1.0 - b1) * gi;
            v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            w[i] -= learning_rate * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffcore::Tensor;

    fn scalar_store(w: f64) -> ParameterStore {
        let mut s = ParameterStore::new(0);
        s.insert("w", Tensor::scalar(w)).unwrap();
        s
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut params = scalar_store(1.5);
        let mut state = AdamState::with_defaults(&params);
        let mut grads = Gradients::zeros_like(&params);
        grads.set(params.id("w").unwrap(), vec![0.0]);
        adam_step(&mut params, &grads, &mut state, DEFAULT_LEARNING_RATE).unwrap();
        assert_eq!(params.by_name("w").unwrap().values(), &[1.5]);
        assert_eq!(state.step_count, 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // m̂ = g, v̂ = g², update = lr · g / (|g| + ε)
        let mut params = scalar_store(1.0);
        let mut state = AdamState::with_defaults(&params);
        let mut grads = Gradients::zeros_like(&params);
        grads.set(params.id("w").unwrap(), vec![1.0]);
        adam_step(&mut params, &grads, &mut state, 0.001).unwrap();
        let w = params.by_name("w").unwrap().values()[0];
        assert!((w - (1.0 - 0.001 / (1.0 + 1e-8))).abs() < 1e-15);
        assert!((w - 0.999).abs() < 1e-9);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut params = scalar_store(1.0);
        let mut state = AdamState::with_defaults(&params);
        let mut grads = Gradients::zeros_like(&params);
        grads.set(params.id("w").unwrap(), vec![1.0, 2.0]);
        assert!(matches!(
            adam_step(&mut params, &grads, &mut state, 0.001),
            Err(Error::GradientShape { .. })
        ));
        assert_eq!(state.step_count, 0);
    }

    #[test]
    fn deterministic() {
        let run = || {
            let mut params = scalar_store(0.3);
            let mut state = AdamState::with_defaults(&params);
            let mut grads = Gradients::zeros_like(&params);
            grads.set(params.id("w").unwrap(), vec![-0.7]);
            for _ in 0..5 {
                adam_step(&mut params, &grads, &mut state, 0.01).unwrap();
            }
            (params, state)
        };
        let (a, sa) = run();
        let (b, sb) = run();
        assert!(a.bitwise_eq(&b));
        assert_eq!(sa, sb);
    }
}
