use alloc::vec::Vec;

use rand::Rng;

use crate::math;
use crate::numerics::{NumericsError, ParamRole, ParamSet, Tensor};

/// Adds a weight drawn uniformly from `±1/sqrt(fan_in)`.
///
/// `fan_in` is the width of everything feeding the same pre-activation,
/// so tensors that are summed into one logit share a bound.
pub(crate) fn uniform_weight<R: Rng + ?Sized>(
    set: &mut ParamSet,
    name: &str,
    shape: &[usize],
    fan_in: usize,
    rng: &mut R,
) -> Result<(), NumericsError> {
    let bound = 1.0 / math::sqrt(fan_in.max(1) as f64);
    let n: usize = shape.iter().product();
    let values: Vec<f64> = (0..n).map(|_| rng.random_range(-bound..=bound)).collect();
    set.insert(
        name,
        Tensor::new(shape.to_vec(), values)?,
        ParamRole::Weight,
        true,
    )
}

pub(crate) fn zero_bias(
    set: &mut ParamSet,
    name: &str,
    shape: &[usize],
) -> Result<(), NumericsError> {
    set.insert(name, Tensor::zeros(shape.to_vec()), ParamRole::Bias, true)
}

pub(crate) fn zero_weight(
    set: &mut ParamSet,
    name: &str,
    shape: &[usize],
) -> Result<(), NumericsError> {
    set.insert(name, Tensor::zeros(shape.to_vec()), ParamRole::Weight, true)
}

/// Checks that `set` holds `name` with exactly `shape`.
pub(crate) fn expect_shape(
    set: &ParamSet,
    name: &str,
    shape: &[usize],
) -> Result<(), NumericsError> {
    let t = set
        .tensor(name)
        .ok_or_else(|| NumericsError::MissingParam(name.into()))?;
    if t.shape() != shape {
        return Err(NumericsError::ShapeMismatch {
            node: name.into(),
            expected: shape.to_vec(),
            found: t.shape().to_vec(),
        });
    }
    Ok(())
}
