use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::fastslow::{build_fastslow, set_input_scaling, FastSlowParams, FASTSLOW_PREFIX};
use super::init::{expect_shape, uniform_weight, zero_bias, zero_weight};
use super::mclstm::{mass_balance, MassConstants, MassStep};
use super::sequence::{Layout, SequenceGraph, SequenceOptions, StepInput};
use super::{positive, CellState, CellsError, StepOutput};
use crate::numerics::{Graph, NodeId, NumericsError, ParamSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FsLstmDims {
    pub cells: usize,
    pub aux: usize,
    /// Width of the projected auxiliary vector `r = P·a`.
    pub proj: usize,
    pub fastslow_layers: usize,
    pub fastslow_width: usize,
}

impl FsLstmDims {
    pub fn new(cells: usize, aux: usize, proj: usize) -> Self {
        Self {
            cells,
            aux,
            proj,
            fastslow_layers: FastSlowParams::DEFAULT_HIDDEN.len(),
            fastslow_width: FastSlowParams::DEFAULT_HIDDEN[0],
        }
    }

    pub fn validate(&self) -> Result<(), CellsError> {
        positive("cells", self.cells)?;
        positive("aux", self.aux)?;
        positive("proj", self.proj)?;
        positive("fastslow_width", self.fastslow_width)
    }

    pub fn fastslow_hidden(&self) -> Vec<usize> {
        vec![self.fastslow_width; self.fastslow_layers]
    }
}

/// FS-LSTM weights: a bias-free projection `proj` of the auxiliary inputs,
/// gates conditioned on the projection and on the scalar total store
/// `ĉ = Σc`, and the fast/slow perceptron under the `fs.` prefix.
///
/// | name | shape |
/// |------|-------|
/// | `proj` | `[n_r, n_a]` |
/// | `w_i`, `u_i`, `b_i` | `[n_c, 2, n_r]`, `[n_c, 2, 1]`, `[n_c, 2]` |
/// | `w_o`, `u_o`, `b_o` | `[n_c, n_r]`, `[n_c, 1]`, `[n_c]` |
/// | `w_r`, `u_r`, `b_r` | `[n_c, n_c, n_r]`, `[n_c, n_c, 1]`, `[n_c, n_c]` |
#[derive(Clone, Debug, PartialEq)]
pub struct FsLstmParams {
    dims: FsLstmDims,
    params: ParamSet,
}

fn shapes(d: &FsLstmDims) -> [(&'static str, Vec<usize>, bool); 9] {
    let (c, r) = (d.cells, d.proj);
    [
        ("w_i", vec![c, 2, r], true),
        ("u_i", vec![c, 2, 1], true),
        ("b_i", vec![c, 2], false),
        ("w_o", vec![c, r], true),
        ("u_o", vec![c, 1], true),
        ("b_o", vec![c], false),
        ("w_r", vec![c, c, r], true),
        ("u_r", vec![c, c, 1], true),
        ("b_r", vec![c, c], false),
    ]
}

impl FsLstmParams {
    pub fn zeros(dims: FsLstmDims) -> Result<Self, CellsError> {
        dims.validate()?;
        let mut set = FastSlowParams::zeros(&dims.fastslow_hidden())?.into_params();
        zero_weight(&mut set, "proj", &[dims.proj, dims.aux])?;
        for (name, shape, is_weight) in shapes(&dims) {
            if is_weight {
                zero_weight(&mut set, name, &shape)?;
            } else {
                zero_bias(&mut set, name, &shape)?;
            }
        }
        Ok(Self { dims, params: set })
    }

    pub fn init<R: Rng + ?Sized>(dims: FsLstmDims, rng: &mut R) -> Result<Self, CellsError> {
        dims.validate()?;
        let mut set = FastSlowParams::init(&dims.fastslow_hidden(), rng)?.into_params();
        uniform_weight(&mut set, "proj", &[dims.proj, dims.aux], dims.aux, rng)?;
        let fan_in = dims.proj + 1;
        for (name, shape, is_weight) in shapes(&dims) {
            if is_weight {
                uniform_weight(&mut set, name, &shape, fan_in, rng)?;
            } else {
                zero_bias(&mut set, name, &shape)?;
            }
        }
        Ok(Self { dims, params: set })
    }

    pub fn from_params(dims: FsLstmDims, params: ParamSet) -> Result<Self, CellsError> {
        dims.validate()?;
        expect_shape(&params, "proj", &[dims.proj, dims.aux])?;
        for (name, shape, _) in shapes(&dims) {
            expect_shape(&params, name, &shape)?;
        }
        // Validates the fs.* entries.
        FastSlowParams::from_params(&dims.fastslow_hidden(), fastslow_subset(&params))?;
        Ok(Self { dims, params })
    }

    /// Replaces the perceptron tensors with those of `fastslow`.
    pub fn with_fastslow(mut self, fastslow: &FastSlowParams) -> Result<Self, CellsError> {
        if fastslow.hidden() != self.dims.fastslow_hidden().as_slice() {
            return Err(CellsError::Length {
                what: "fastslow hidden layers",
                expected: self.dims.fastslow_layers,
                found: fastslow.hidden().len(),
            });
        }
        for (name, p) in fastslow.params().iter() {
            if let Some(t) = self.params.tensor_mut(name) {
                *t = p.tensor.clone();
            }
        }
        Ok(self)
    }

    pub fn fastslow(&self) -> FastSlowParams {
        FastSlowParams::from_params(&self.dims.fastslow_hidden(), fastslow_subset(&self.params))
            .expect("validated on construction")
    }

    pub fn set_input_scaling(&mut self, shift: [f64; 2], scale: [f64; 2]) {
        set_input_scaling(&mut self.params, shift, scale);
    }

    pub fn dims(&self) -> FsLstmDims {
        self.dims
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
}

fn fastslow_subset(params: &ParamSet) -> ParamSet {
    let mut out = ParamSet::new();
    for (name, p) in params
        .iter()
        .filter(|(n, _)| n.starts_with(FASTSLOW_PREFIX))
    {
        out.insert(name, p.tensor.clone(), p.role, p.trainable)
            .expect("names unique in source");
    }
    out
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn build_fslstm_step(
    g: &mut Graph,
    d: &FsLstmDims,
    k: &MassConstants,
    c_prev: NodeId,
    wp: NodeId,
    a: NodeId,
    tag: &str,
) -> Result<MassStep, NumericsError> {
    let c = d.cells;
    let proj = g.param("proj", &[d.proj, d.aux])?;
    let r = g.matvec(proj, a)?;
    g.set_label(r, format!("{tag}r"));
    let total = g.sum(c_prev)?;

    let gate = |g: &mut Graph, name: char, out: &[usize]| -> Result<NodeId, NumericsError> {
        let mut ws = out.to_vec();
        ws.push(d.proj);
        let mut us = out.to_vec();
        us.push(1);
        let w = g.param(&format!("w_{name}"), &ws)?;
        let u = g.param(&format!("u_{name}"), &us)?;
        let b = g.param(&format!("b_{name}"), out)?;
        let wr = g.matvec(w, r)?;
        let uc = g.matvec(u, total)?;
        let z = g.add(wr, uc)?;
        g.add(z, b)
    };
    let i_logits = gate(g, 'i', &[c, 2])?;
    let o_logits = gate(g, 'o', &[c])?;
    let r_logits = gate(g, 'r', &[c, c])?;

    let i = g.col_softmax(i_logits)?;
    g.set_label(i, format!("{tag}i"));
    let o = g.sigmoid(o_logits)?;
    g.set_label(o, format!("{tag}o"));
    let redistribution = g.col_softmax(r_logits)?;
    g.set_label(redistribution, format!("{tag}R"));
    let mass = build_fastslow(g, &d.fastslow_hidden(), wp, tag)?;
    mass_balance(g, k, redistribution, c_prev, i, mass, o, tag)
}

/// One FS-LSTM step: soil moisture `w` and precipitation `p` feed the
/// fast/slow perceptron whose two outputs are the mass added this step.
pub fn fslstm_step(
    params: &FsLstmParams,
    c_prev: &CellState,
    w: f64,
    p: f64,
    a_aux: &[f64],
) -> Result<StepOutput, CellsError> {
    let seq = SequenceGraph::build(&Layout::FsLstm(params.dims), 1, SequenceOptions::trace())?;
    seq.single_step(
        params.params(),
        c_prev,
        StepInput {
            mass: &[w, p],
            aux: a_aux,
        },
    )
}
