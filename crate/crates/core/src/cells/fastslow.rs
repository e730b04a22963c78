use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::init::{expect_shape, uniform_weight, zero_bias, zero_weight};
use super::{positive, CellsError};
use crate::numerics::{Bindings, Graph, NodeId, NumericsError, ParamRole, ParamSet, Tensor};

/// Name prefix of every fast/slow tensor inside a larger parameter set.
pub const FASTSLOW_PREFIX: &str = "fs.";

/// The perceptron mapping (soil moisture, precipitation) to
/// (Q_fast, Q_slow).
///
/// Hidden layers use tanh; the output layer squares its pre-activation so
/// both components are nonnegative. Inputs are standardised by the frozen
/// `fs.in_shift` / `fs.in_scale` tensors before the first layer; these only
/// condition the network and carry no mass.
#[derive(Clone, Debug, PartialEq)]
pub struct FastSlowParams {
    hidden: Vec<usize>,
    params: ParamSet,
}

pub(crate) fn layer_names(layer: usize) -> (String, String) {
    (
        format!("{FASTSLOW_PREFIX}w{}", layer + 1),
        format!("{FASTSLOW_PREFIX}b{}", layer + 1),
    )
}

pub(crate) const IN_SHIFT: &str = "fs.in_shift";
pub(crate) const IN_SCALE: &str = "fs.in_scale";

/// (fan_in, fan_out) per layer for inputs of width 2 and outputs of width 2.
fn layer_widths(hidden: &[usize]) -> Vec<(usize, usize)> {
    let mut widths = Vec::with_capacity(hidden.len() + 1);
    let mut prev = 2;
    for &h in hidden {
        widths.push((prev, h));
        prev = h;
    }
    widths.push((prev, 2));
    widths
}

impl FastSlowParams {
    /// The configuration used throughout: two hidden layers of ten units.
    pub const DEFAULT_HIDDEN: [usize; 2] = [10, 10];

    pub fn zeros(hidden: &[usize]) -> Result<Self, CellsError> {
        Self::build(hidden, |set, name, shape, _| zero_weight(set, name, shape))
    }

    pub fn init<R: Rng + ?Sized>(hidden: &[usize], rng: &mut R) -> Result<Self, CellsError> {
        Self::build(hidden, |set, name, shape, fan_in| {
            uniform_weight(set, name, shape, fan_in, rng)
        })
    }

    fn build(
        hidden: &[usize],
        mut weight: impl FnMut(&mut ParamSet, &str, &[usize], usize) -> Result<(), NumericsError>,
    ) -> Result<Self, CellsError> {
        for &h in hidden {
            positive("fastslow hidden width", h)?;
        }
        let mut set = ParamSet::new();
        for (layer, (fan_in, fan_out)) in layer_widths(hidden).into_iter().enumerate() {
            let (w, b) = layer_names(layer);
            weight(&mut set, &w, &[fan_out, fan_in], fan_in)?;
            zero_bias(&mut set, &b, &[fan_out])?;
        }
        set.insert(IN_SHIFT, Tensor::zeros(vec![2]), ParamRole::Bias, false)?;
        set.insert(
            IN_SCALE,
            Tensor::filled(vec![2], 1.0),
            ParamRole::Weight,
            false,
        )?;
        Ok(Self {
            hidden: hidden.to_vec(),
            params: set,
        })
    }

    /// Wraps an existing set, checking every expected tensor and shape.
    pub fn from_params(hidden: &[usize], params: ParamSet) -> Result<Self, CellsError> {
        for (layer, (fan_in, fan_out)) in layer_widths(hidden).into_iter().enumerate() {
            let (w, b) = layer_names(layer);
            expect_shape(&params, &w, &[fan_out, fan_in])?;
            expect_shape(&params, &b, &[fan_out])?;
        }
        expect_shape(&params, IN_SHIFT, &[2])?;
        expect_shape(&params, IN_SCALE, &[2])?;
        Ok(Self {
            hidden: hidden.to_vec(),
            params,
        })
    }

    pub fn hidden(&self) -> &[usize] {
        &self.hidden
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn into_params(self) -> ParamSet {
        self.params
    }

    /// Sets the frozen input standardisation `(x - shift) * scale`.
    pub fn set_input_scaling(&mut self, shift: [f64; 2], scale: [f64; 2]) {
        set_input_scaling(&mut self.params, shift, scale);
    }
}

pub(crate) fn set_input_scaling(params: &mut ParamSet, shift: [f64; 2], scale: [f64; 2]) {
    if let Some(t) = params.tensor_mut(IN_SHIFT) {
        t.values_mut().copy_from_slice(&shift);
    }
    if let Some(t) = params.tensor_mut(IN_SCALE) {
        t.values_mut().copy_from_slice(&scale);
    }
}

/// Appends the perceptron to `g` and returns its `[Q_fast, Q_slow]` node;
/// `input` is the `[w, p]` vector and `tag` prefixes the output label.
pub fn build_fastslow(
    g: &mut Graph,
    hidden: &[usize],
    input: NodeId,
    tag: &str,
) -> Result<NodeId, NumericsError> {
    let shift = g.param(IN_SHIFT, &[2])?;
    let scale = g.param(IN_SCALE, &[2])?;
    let centred = g.sub(input, shift)?;
    let mut x = g.mul(centred, scale)?;
    let widths = layer_widths(hidden);
    let last = widths.len() - 1;
    for (layer, (fan_in, fan_out)) in widths.into_iter().enumerate() {
        let (wn, bn) = layer_names(layer);
        let w = g.param(&wn, &[fan_out, fan_in])?;
        let b = g.param(&bn, &[fan_out])?;
        let z = g.matvec(w, x)?;
        let z = g.add(z, b)?;
        x = if layer == last {
            g.square(z)?
        } else {
            g.tanh(z)?
        };
    }
    g.set_label(x, format!("{tag}fastslow"));
    Ok(x)
}

/// Evaluates the perceptron at one (soil moisture, precipitation) pair.
pub fn fastslow_forward(params: &FastSlowParams, w: f64, p: f64) -> Result<(f64, f64), CellsError> {
    if !w.is_finite() {
        return Err(CellsError::NonFiniteInput { step: 0, index: 0 });
    }
    if !p.is_finite() {
        return Err(CellsError::NonFiniteInput { step: 0, index: 1 });
    }
    let mut g = Graph::new();
    let x = g.input("wp", &[2])?;
    let out = build_fastslow(&mut g, &params.hidden, x, "")?;
    g.output("q", out)?;
    let mut b = Bindings::new();
    b.insert("wp".into(), Tensor::vector(vec![w, p]));
    let eval = g.forward(&b, &params.params)?;
    let q = eval.output("q")?;
    Ok((q[0], q[1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_network_emits_zero() {
        let p = FastSlowParams::zeros(&FastSlowParams::DEFAULT_HIDDEN).unwrap();
        assert_eq!(fastslow_forward(&p, 0.7, 12.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn rejects_non_finite_input() {
        let p = FastSlowParams::zeros(&[3]).unwrap();
        assert!(fastslow_forward(&p, f64::NAN, 1.0).is_err());
        assert!(fastslow_forward(&p, 0.0, f64::INFINITY).is_err());
    }

    /// Straight-line reimplementation: two tanh layers, squared output.
    fn by_hand(p: &ParamSet, w: f64, pr: f64) -> (f64, f64) {
        let v = |n: &str| p.tensor(n).unwrap().values().to_vec();
        let (w1, b1, w2, b2, w3, b3) = (
            v("fs.w1"),
            v("fs.b1"),
            v("fs.w2"),
            v("fs.b2"),
            v("fs.w3"),
            v("fs.b3"),
        );
        let (shift, scale) = (v("fs.in_shift"), v("fs.in_scale"));
        let x = [(w - shift[0]) * scale[0], (pr - shift[1]) * scale[1]];
        let mut h1 = [0.0; 10];
        for j in 0..10 {
            h1[j] = (w1[j * 2] * x[0] + w1[j * 2 + 1] * x[1] + b1[j]).tanh();
        }
        let mut h2 = [0.0; 10];
        for j in 0..10 {
            let mut s = b2[j];
            for k in 0..10 {
                s += w2[j * 10 + k] * h1[k];
            }
            h2[j] = s.tanh();
        }
        let mut out = [0.0; 2];
        for j in 0..2 {
            let mut s = b3[j];
            for k in 0..10 {
                s += w3[j * 10 + k] * h2[k];
            }
            out[j] = s * s;
        }
        (out[0], out[1])
    }

    #[test]
    fn matches_hand_rolled_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut p = FastSlowParams::init(&FastSlowParams::DEFAULT_HIDDEN, &mut rng).unwrap();
        // Non-zero biases so every term of the oracle is exercised.
        for (_, param) in p.params_mut().iter_mut() {
            if param.role == ParamRole::Bias && param.trainable {
                for v in param.tensor.values_mut() {
                    *v = rng.random_range(-0.5..0.5);
                }
            }
        }
        p.set_input_scaling([0.25, 1.0], [2.0, 0.5]);
        let got = fastslow_forward(&p, 0.3, 1.2).unwrap();
        let want = by_hand(p.params(), 0.3, 1.2);
        assert!(
            (got.0 - want.0).abs() <= 1e-14 * want.0.abs().max(1.0),
            "{got:?} vs {want:?}"
        );
        assert!(
            (got.1 - want.1).abs() <= 1e-14 * want.1.abs().max(1.0),
            "{got:?} vs {want:?}"
        );
    }

    #[test]
    fn default_shape_counts() {
        let p = FastSlowParams::zeros(&FastSlowParams::DEFAULT_HIDDEN).unwrap();
        let c = p.params().count();
        assert_eq!((c.weights, c.biases), (140, 22));
    }
}
