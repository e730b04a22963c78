use alloc::format;
use alloc::vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::init::{expect_shape, uniform_weight, zero_bias, zero_weight};
use super::sequence::{Layout, SequenceGraph, SequenceOptions, StepInput};
use super::{positive, CellState, CellsError, StepOutput};
use crate::numerics::{Graph, NodeId, NumericsError, ParamSet, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct McLstmDims {
    pub cells: usize,
    pub aux: usize,
    pub mass: usize,
}

impl McLstmDims {
    pub fn validate(&self) -> Result<(), CellsError> {
        positive("cells", self.cells)?;
        positive("aux", self.aux)?;
        positive("mass", self.mass)
    }
}

/// MC-LSTM weights. Gates read the auxiliary inputs `a` and the
/// L1-normalised store `c / |c|_1` (zero for an empty store).
///
/// | name | shape |
/// |------|-------|
/// | `w_i`, `u_i`, `b_i` | `[n_c, n_m, n_a]`, `[n_c, n_m, n_c]`, `[n_c, n_m]` |
/// | `w_o`, `u_o`, `b_o` | `[n_c, n_a]`, `[n_c, n_c]`, `[n_c]` |
/// | `w_r`, `u_r`, `b_r` | `[n_c, n_c, n_a]`, `[n_c, n_c, n_c]`, `[n_c, n_c]` |
#[derive(Clone, Debug, PartialEq)]
pub struct McLstmParams {
    dims: McLstmDims,
    params: ParamSet,
}

fn shapes(d: &McLstmDims) -> [(&'static str, alloc::vec::Vec<usize>, bool); 9] {
    let (c, a, m) = (d.cells, d.aux, d.mass);
    [
        ("w_i", vec![c, m, a], true),
        ("u_i", vec![c, m, c], true),
        ("b_i", vec![c, m], false),
        ("w_o", vec![c, a], true),
        ("u_o", vec![c, c], true),
        ("b_o", vec![c], false),
        ("w_r", vec![c, c, a], true),
        ("u_r", vec![c, c, c], true),
        ("b_r", vec![c, c], false),
    ]
}

impl McLstmParams {
    pub fn zeros(dims: McLstmDims) -> Result<Self, CellsError> {
        dims.validate()?;
        let mut set = ParamSet::new();
        for (name, shape, is_weight) in shapes(&dims) {
            if is_weight {
                zero_weight(&mut set, name, &shape)?;
            } else {
                zero_bias(&mut set, name, &shape)?;
            }
        }
        Ok(Self { dims, params: set })
    }

    pub fn init<R: Rng + ?Sized>(dims: McLstmDims, rng: &mut R) -> Result<Self, CellsError> {
        dims.validate()?;
        let fan_in = dims.aux + dims.cells;
        let mut set = ParamSet::new();
        for (name, shape, is_weight) in shapes(&dims) {
            if is_weight {
                uniform_weight(&mut set, name, &shape, fan_in, rng)?;
            } else {
                zero_bias(&mut set, name, &shape)?;
            }
        }
        Ok(Self { dims, params: set })
    }

    pub fn from_params(dims: McLstmDims, params: ParamSet) -> Result<Self, CellsError> {
        dims.validate()?;
        for (name, shape, _) in shapes(&dims) {
            expect_shape(&params, name, &shape)?;
        }
        Ok(Self { dims, params })
    }

    pub fn dims(&self) -> McLstmDims {
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

/// Graph nodes of one mass-conserving step.
#[derive(Clone, Copy, Debug)]
pub(crate) struct MassStep {
    pub c_next: NodeId,
    pub h: NodeId,
    pub q: NodeId,
    pub mass_in: NodeId,
    pub input_gate: NodeId,
    pub output_gate: NodeId,
    pub redistribution: NodeId,
}

/// Constants shared by every step of a mass-conserving sequence.
#[derive(Clone, Copy, Debug)]
pub(crate) struct MassConstants {
    ones: NodeId,
    /// 1 for every cell but the trash cell.
    streamflow_mask: NodeId,
}

impl MassConstants {
    pub fn declare(g: &mut Graph, cells: usize) -> Self {
        let ones = g.constant(Tensor::filled(vec![cells], 1.0));
        let mut mask = vec![1.0; cells];
        mask[cells - 1] = 0.0;
        let streamflow_mask = g.constant(Tensor::vector(mask));
        Self {
            ones,
            streamflow_mask,
        }
    }
}

/// `m_tot = R·c + i·x`, `c' = (1 − o) ⊙ m_tot`, `h = o ⊙ m_tot`, and
/// streamflow as the outflow of every cell but the last.
#[allow(clippy::too_many_arguments)]
pub(crate) fn mass_balance(
    g: &mut Graph,
    k: &MassConstants,
    redistribution: NodeId,
    c_prev: NodeId,
    input_gate: NodeId,
    mass: NodeId,
    output_gate: NodeId,
    tag: &str,
) -> Result<MassStep, NumericsError> {
    let kept = g.matvec(redistribution, c_prev)?;
    let added = g.matvec(input_gate, mass)?;
    let m_tot = g.add(kept, added)?;
    g.set_label(m_tot, format!("{tag}m_tot"));
    let retain = g.sub(k.ones, output_gate)?;
    let c_next = g.mul(retain, m_tot)?;
    g.set_label(c_next, format!("{tag}c"));
    let h = g.mul(output_gate, m_tot)?;
    g.set_label(h, format!("{tag}h"));
    let routed = g.mul(h, k.streamflow_mask)?;
    let q = g.sum(routed)?;
    g.set_label(q, format!("{tag}q"));
    let mass_in = g.sum(mass)?;
    Ok(MassStep {
        c_next,
        h,
        q,
        mass_in,
        input_gate,
        output_gate,
        redistribution,
    })
}

pub(crate) fn build_mclstm_step(
    g: &mut Graph,
    d: &McLstmDims,
    k: &MassConstants,
    c_prev: NodeId,
    x: NodeId,
    a: NodeId,
    tag: &str,
) -> Result<MassStep, NumericsError> {
    let (c, n_a, m) = (d.cells, d.aux, d.mass);
    let c_norm = g.l1_normalize(c_prev)?;

    let gate = |g: &mut Graph, name: char, out: &[usize]| -> Result<NodeId, NumericsError> {
        let mut ws = out.to_vec();
        ws.push(n_a);
        let mut us = out.to_vec();
        us.push(c);
        let w = g.param(&format!("w_{name}"), &ws)?;
        let u = g.param(&format!("u_{name}"), &us)?;
        let b = g.param(&format!("b_{name}"), out)?;
        let wa = g.matvec(w, a)?;
        let uc = g.matvec(u, c_norm)?;
        let z = g.add(wa, uc)?;
        g.add(z, b)
    };
    let i_logits = gate(g, 'i', &[c, m])?;
    let o_logits = gate(g, 'o', &[c])?;
    let r_logits = gate(g, 'r', &[c, c])?;

    let i = g.col_softmax(i_logits)?;
    g.set_label(i, format!("{tag}i"));
    let o = g.sigmoid(o_logits)?;
    g.set_label(o, format!("{tag}o"));
    let r = g.col_softmax(r_logits)?;
    g.set_label(r, format!("{tag}R"));
    mass_balance(g, k, r, c_prev, i, x, o, tag)
}

/// One MC-LSTM step from store `c_prev` with mass input `x_mass` and
/// auxiliary input `a_aux`.
pub fn mclstm_step(
    params: &McLstmParams,
    c_prev: &CellState,
    x_mass: &[f64],
    a_aux: &[f64],
) -> Result<StepOutput, CellsError> {
    let seq = SequenceGraph::build(&Layout::McLstm(params.dims), 1, SequenceOptions::trace())?;
    seq.single_step(
        params.params(),
        c_prev,
        StepInput {
            mass: x_mass,
            aux: a_aux,
        },
    )
}
