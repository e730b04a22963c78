use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::math;
use crate::numerics::{Gradients, ParamSet};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamHyper {
    pub fn new(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moments per parameter, and the step count.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub first: BTreeMap<String, Vec<f64>>,
    pub second: BTreeMap<String, Vec<f64>>,
}

impl AdamState {
    pub fn new() -> Self {
        Self::default()
    }
}

/// One bias-corrected Adam update of every parameter that has a gradient.
pub fn adam_step(
    params: &mut ParamSet,
    grads: &Gradients,
    state: &mut AdamState,
    hyper: &AdamHyper,
) -> Result<(), TrainError> {
    for (name, g) in grads.iter() {
        if !g.is_finite() {
            return Err(TrainError::NonFiniteUpdate(name.to_string()));
        }
        let p = params
            .tensor(name)
            .ok_or_else(|| TrainError::UnknownGradient(name.to_string()))?;
        if p.shape() != g.shape() {
            return Err(TrainError::UnknownGradient(name.to_string()));
        }
    }
    state.step += 1;
    let t = state.step as f64;
    let c1 = 1.0 - math::powf(hyper.beta1, t);
    let c2 = 1.0 - math::powf(hyper.beta2, t);
    for (name, g) in grads.iter() {
        let n = g.len();
        let m = state
            .first
            .entry(name.to_string())
            .or_insert_with(|| alloc::vec![0.0; n]);
        let v = state
            .second
            .entry(name.to_string())
            .or_insert_with(|| alloc::vec![0.0; n]);
        let theta = params.tensor_mut(name).expect("checked above").values_mut();
        for i in 0..n {
            let gi = g.values()[i];
            m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * gi;
            v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * gi * gi;
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            theta[i] -= hyper.learning_rate * m_hat / (math::sqrt(v_hat) + hyper.eps);
        }
    }
    Ok(())
}
