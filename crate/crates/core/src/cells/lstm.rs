use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::init::{expect_shape, uniform_weight, zero_bias, zero_weight};
use super::sequence::{Layout, ModelState, SequenceGraph, SequenceOptions, StepInput};
use super::{positive, CellsError};
use crate::numerics::{Graph, NodeId, NumericsError, ParamSet};

/// Baseline LSTM over the concatenation of mass and auxiliary inputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LstmDims {
    pub mass: usize,
    pub aux: usize,
    pub hidden: usize,
}

impl LstmDims {
    pub fn validate(&self) -> Result<(), CellsError> {
        positive("mass", self.mass)?;
        positive("hidden", self.hidden)
    }

    pub fn inputs(&self) -> usize {
        self.mass + self.aux
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LstmParams {
    dims: LstmDims,
    params: ParamSet,
}

const GATES: [char; 4] = ['i', 'f', 'g', 'o'];

impl LstmParams {
    fn build(
        dims: LstmDims,
        mut weight: impl FnMut(&mut ParamSet, &str, &[usize], usize) -> Result<(), NumericsError>,
    ) -> Result<Self, CellsError> {
        dims.validate()?;
        let (h, width) = (dims.hidden, dims.inputs() + dims.hidden);
        let mut set = ParamSet::new();
        for gate in GATES {
            weight(&mut set, &format!("w_{gate}"), &[h, width], width)?;
            zero_bias(&mut set, &format!("b_{gate}"), &[h])?;
        }
        weight(&mut set, "w_head", &[h], h)?;
        zero_bias(&mut set, "b_head", &[])?;
        Ok(Self { dims, params: set })
    }

    pub fn zeros(dims: LstmDims) -> Result<Self, CellsError> {
        Self::build(dims, |s, n, shape, _| zero_weight(s, n, shape))
    }

    pub fn init<R: Rng + ?Sized>(dims: LstmDims, rng: &mut R) -> Result<Self, CellsError> {
        Self::build(dims, |s, n, shape, fan_in| {
            uniform_weight(s, n, shape, fan_in, rng)
        })
    }

    pub fn from_params(dims: LstmDims, params: ParamSet) -> Result<Self, CellsError> {
        dims.validate()?;
        let (h, width) = (dims.hidden, dims.inputs() + dims.hidden);
        for gate in GATES {
            expect_shape(&params, &format!("w_{gate}"), &[h, width])?;
            expect_shape(&params, &format!("b_{gate}"), &[h])?;
        }
        expect_shape(&params, "w_head", &[h])?;
        expect_shape(&params, "b_head", &[])?;
        Ok(Self { dims, params })
    }

    pub fn dims(&self) -> LstmDims {
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

pub(crate) struct LstmStep {
    pub h: NodeId,
    pub c: NodeId,
    pub head: NodeId,
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn build_lstm_step(
    g: &mut Graph,
    d: &LstmDims,
    h_prev: NodeId,
    c_prev: NodeId,
    x: NodeId,
    a: NodeId,
    tag: &str,
) -> Result<LstmStep, NumericsError> {
    let (h, width) = (d.hidden, d.inputs() + d.hidden);
    let xh = if d.aux > 0 {
        g.concat(&[x, a, h_prev])?
    } else {
        g.concat(&[x, h_prev])?
    };
    let pre = |g: &mut Graph, gate: char| -> Result<NodeId, NumericsError> {
        let w = g.param(&format!("w_{gate}"), &[h, width])?;
        let b = g.param(&format!("b_{gate}"), &[h])?;
        let z = g.matvec(w, xh)?;
        g.add(z, b)
    };
    let i = pre(g, 'i')?;
    let i = g.sigmoid(i)?;
    let f = pre(g, 'f')?;
    let f = g.sigmoid(f)?;
    let cand = pre(g, 'g')?;
    let cand = g.tanh(cand)?;
    let o = pre(g, 'o')?;
    let o = g.sigmoid(o)?;
    let keep = g.mul(f, c_prev)?;
    let write = g.mul(i, cand)?;
    let c = g.add(keep, write)?;
    g.set_label(c, format!("{tag}c"));
    let squashed = g.tanh(c)?;
    let h_next = g.mul(o, squashed)?;
    g.set_label(h_next, format!("{tag}h"));
    let w_head = g.param("w_head", &[h])?;
    let b_head = g.param("b_head", &[])?;
    let lin = g.matvec(w_head, h_next)?;
    let head = g.add(lin, b_head)?;
    g.set_label(head, format!("{tag}q"));
    Ok(LstmStep { h: h_next, c, head })
}

/// One LSTM step on `x_all` (mass inputs followed by auxiliary inputs);
/// returns the new state and the linear head applied to it.
pub fn vanilla_lstm_step(
    params: &LstmParams,
    state: &LstmState,
    x_all: &[f64],
) -> Result<(LstmState, f64), CellsError> {
    let d = params.dims;
    if x_all.len() != d.inputs() {
        return Err(CellsError::Length {
            what: "lstm input",
            expected: d.inputs(),
            found: x_all.len(),
        });
    }
    let seq = SequenceGraph::build(&Layout::Lstm(d), 1, SequenceOptions::default())?;
    let (mass, aux) = x_all.split_at(d.mass);
    let run = seq.run(
        params.params(),
        &ModelState::Lstm(state.clone()),
        &[StepInput { mass, aux }],
    )?;
    match run.final_state {
        ModelState::Lstm(s) => Ok((s, run.q[0])),
        ModelState::Mass(_) => unreachable!("lstm layout yields lstm state"),
    }
}
