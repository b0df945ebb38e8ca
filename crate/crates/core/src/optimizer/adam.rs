use crate::error::{Result, ShredError};
use crate::nncore::ParamArrays;

/// Moment accumulators and hyperparameters of ADAM.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub t: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new<P: ParamArrays>(params: &P, learning_rate: f64, beta1: f64, beta2: f64, epsilon: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) {
            return Err(ShredError::arg(format!(
                "betas must lie in [0, 1), got {beta1}, {beta2}"
            )));
        }
        if !(epsilon > 0.0) || !(learning_rate > 0.0) {
            return Err(ShredError::arg("learning rate and epsilon must be positive"));
        }
        let zeros: Vec<Vec<f64>> = params.arrays().iter().map(|a| vec![0.0; a.len()]).collect();
        Ok(AdamState {
            m: zeros.clone(),
            v: zeros,
            t: 0,
            learning_rate,
            beta1,
            beta2,
            epsilon,
        })
    }

    pub fn with_defaults<P: ParamArrays>(params: &P, learning_rate: f64) -> Result<Self> {
        AdamState::new(params, learning_rate, 0.9, 0.999, 1e-8)
    }
}

/// One bias-corrected ADAM update: `θ ← θ − α m̂ / (sqrt(v̂) + ε)`.
pub fn adam_step<P: ParamArrays, G: ParamArrays>(params: &mut P, grads: &G, state: &mut AdamState) -> Result<()> {
    if let Some(array) = grads.first_non_finite() {
        return Err(ShredError::NumericFailure { array });
    }
    let grad_arrays = grads.arrays();
    let mut param_arrays = params.arrays_mut();
    if grad_arrays.len() != param_arrays.len()
        || grad_arrays.len() != state.m.len()
        || grad_arrays
            .iter()
            .zip(&param_arrays)
            .zip(&state.m)
            .any(|((g, p), m)| g.len() != p.len() || g.len() != m.len())
    {
        return Err(ShredError::Shape("gradient, parameters and ADAM state differ".into()));
    }
    state.t += 1;
    let t = state.t as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for (((p, g), m), v) in param_arrays
        .iter_mut()
        .zip(grad_arrays)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        for k in 0..p.len() {
            m[k] = b1 * m[k] + (1.0 - b1) * g[k];
            v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
            let m_hat = m[k] / c1;
            let v_hat = v[k] / c2;
            p[k] -= state.learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
        }
    }
    Ok(())
}

impl ParamArrays for Vec<f64> {
    fn array_names(&self) -> Vec<String> {
        vec!["values".to_string()]
    }
    fn arrays(&self) -> Vec<&[f64]> {
        vec![self.as_slice()]
    }
    fn arrays_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.as_mut_slice()]
    }
}
