use alloc::string::{String, ToString};

use super::{Bindings, Graph, NumericsError, ParamSet, Workspace};

/// Floor on the denominator of the relative error.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-8;

/// Outcome of comparing reverse-mode gradients against central differences.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientCheck {
    pub max_relative_error: f64,
    /// Parameter name and flat index where the maximum occurred.
    pub worst: Option<(String, usize)>,
    /// Number of scalar parameters probed.
    pub probed: usize,
}

/// Perturbs every element of every trainable parameter by `±epsilon` and
/// compares `(f(θ+ε) − f(θ−ε)) / 2ε` with the reverse-mode gradient.
///
/// The relative error of one element is
/// `|analytic − numeric| / max(|numeric|, 1e-8)`; the maximum is returned.
pub fn finite_difference_check(
    graph: &Graph,
    inputs: &Bindings,
    params: &ParamSet,
    output: &str,
    epsilon: f64,
) -> Result<GradientCheck, NumericsError> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(NumericsError::InvalidEpsilon(epsilon));
    }
    if let Some((name, _)) = params.trainable().find(|(_, t)| !t.is_finite()) {
        return Err(NumericsError::NonFinite {
            node: name.to_string(),
            index: 0,
        });
    }
    let analytic = {
        let mut eval = graph.forward(inputs, params)?;
        eval.backward(output)?
    };

    let mut probe = params.clone();
    let mut ws = Some(Workspace::default());
    let mut eval_at = |probe: &ParamSet, name: &str, index: usize| -> Result<f64, NumericsError> {
        let eval = graph.forward_in(ws.take().unwrap_or_default(), inputs, probe)?;
        let value = eval.output(output)?[0];
        ws = Some(eval.into_workspace());
        if !value.is_finite() {
            return Err(NumericsError::NonFinite {
                node: alloc::format!("{name}[{index}] perturbation"),
                index,
            });
        }
        Ok(value)
    };

    let names: alloc::vec::Vec<String> = params.trainable().map(|(k, _)| k.to_string()).collect();
    let mut report = GradientCheck {
        max_relative_error: 0.0,
        worst: None,
        probed: 0,
    };
    for name in &names {
        let grad = analytic
            .get(name)
            .ok_or_else(|| NumericsError::MissingParam(name.clone()))?;
        for i in 0..grad.len() {
            let original = probe.tensor(name).expect("cloned from params").values()[i];
            probe.tensor_mut(name).expect("present").values_mut()[i] = original + epsilon;
            let up = eval_at(&probe, name, i)?;
            probe.tensor_mut(name).expect("present").values_mut()[i] = original - epsilon;
            let down = eval_at(&probe, name, i)?;
            probe.tensor_mut(name).expect("present").values_mut()[i] = original;

            let numeric = (up - down) / (2.0 * epsilon);
            let err = (grad.values()[i] - numeric).abs() / numeric.abs().max(RELATIVE_ERROR_FLOOR);
            report.probed += 1;
            if report.worst.is_none() || err > report.max_relative_error {
                report.max_relative_error = err;
                report.worst = Some((name.clone(), i));
            }
        }
    }
    Ok(report)
}
