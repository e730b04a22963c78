use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::fslstm::build_fslstm_step;
use super::lstm::build_lstm_step;
use super::mclstm::{build_mclstm_step, MassConstants};
use super::{
    CellState, CellsError, FsLstmDims, FsLstmParams, LstmDims, LstmParams, LstmState, McLstmDims,
    McLstmParams, ModelKind, StepOutput,
};
use crate::numerics::{Bindings, Evaluation, Graph, NumericsError, ParamSet, Tensor, Workspace};

/// Architecture and dimensions, without weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Layout {
    Lstm(LstmDims),
    McLstm(McLstmDims),
    FsLstm(FsLstmDims),
}

impl Layout {
    pub fn kind(&self) -> ModelKind {
        match self {
            Layout::Lstm(_) => ModelKind::Lstm,
            Layout::McLstm(_) => ModelKind::McLstm,
            Layout::FsLstm(_) => ModelKind::FsLstm,
        }
    }

    /// Width of the per-step mass input.
    pub fn mass_width(&self) -> usize {
        match self {
            Layout::Lstm(d) => d.mass,
            Layout::McLstm(d) => d.mass,
            Layout::FsLstm(_) => 2,
        }
    }

    pub fn aux_width(&self) -> usize {
        match self {
            Layout::Lstm(d) => d.aux,
            Layout::McLstm(d) => d.aux,
            Layout::FsLstm(d) => d.aux,
        }
    }

    /// Width of the recurrent state (cells or hidden units).
    pub fn state_width(&self) -> usize {
        match self {
            Layout::Lstm(d) => d.hidden,
            Layout::McLstm(d) => d.cells,
            Layout::FsLstm(d) => d.cells,
        }
    }

    pub fn initial_state(&self) -> ModelState {
        match self {
            Layout::Lstm(d) => ModelState::Lstm(LstmState::zeros(d.hidden)),
            _ => ModelState::Mass(CellState::zeros(self.state_width())),
        }
    }
}

/// A model: layout plus weights.
#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Lstm(LstmParams),
    McLstm(McLstmParams),
    FsLstm(FsLstmParams),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        self.layout().kind()
    }

    pub fn layout(&self) -> Layout {
        match self {
            Model::Lstm(p) => Layout::Lstm(p.dims()),
            Model::McLstm(p) => Layout::McLstm(p.dims()),
            Model::FsLstm(p) => Layout::FsLstm(p.dims()),
        }
    }

    pub fn params(&self) -> &ParamSet {
        match self {
            Model::Lstm(p) => p.params(),
            Model::McLstm(p) => p.params(),
            Model::FsLstm(p) => p.params(),
        }
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        match self {
            Model::Lstm(p) => p.params_mut(),
            Model::McLstm(p) => p.params_mut(),
            Model::FsLstm(p) => p.params_mut(),
        }
    }

    /// Seeded initialisation of the given layout.
    pub fn init<R: rand::Rng + ?Sized>(layout: Layout, rng: &mut R) -> Result<Self, CellsError> {
        Ok(match layout {
            Layout::Lstm(d) => Model::Lstm(LstmParams::init(d, rng)?),
            Layout::McLstm(d) => Model::McLstm(McLstmParams::init(d, rng)?),
            Layout::FsLstm(d) => Model::FsLstm(FsLstmParams::init(d, rng)?),
        })
    }

    pub fn zeros(layout: Layout) -> Result<Self, CellsError> {
        Ok(match layout {
            Layout::Lstm(d) => Model::Lstm(LstmParams::zeros(d)?),
            Layout::McLstm(d) => Model::McLstm(McLstmParams::zeros(d)?),
            Layout::FsLstm(d) => Model::FsLstm(FsLstmParams::zeros(d)?),
        })
    }

    /// Rebuilds a model from stored tensors, validating every shape.
    pub fn from_params(layout: Layout, params: ParamSet) -> Result<Self, CellsError> {
        Ok(match layout {
            Layout::Lstm(d) => Model::Lstm(LstmParams::from_params(d, params)?),
            Layout::McLstm(d) => Model::McLstm(McLstmParams::from_params(d, params)?),
            Layout::FsLstm(d) => Model::FsLstm(FsLstmParams::from_params(d, params)?),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ModelState {
    Mass(CellState),
    Lstm(LstmState),
}

/// Inputs of one time step. For FS-LSTM `mass` is `[w, p]`.
#[derive(Clone, Copy, Debug)]
pub struct StepInput<'a> {
    pub mass: &'a [f64],
    pub aux: &'a [f64],
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SequenceOptions {
    /// Retain per-step stores and outflows as outputs.
    pub trace: bool,
    /// Add a squared-error loss on the final streamflow.
    pub loss: bool,
}

impl SequenceOptions {
    pub fn trace() -> Self {
        Self {
            trace: true,
            loss: false,
        }
    }

    pub fn training() -> Self {
        Self {
            trace: false,
            loss: true,
        }
    }
}

/// Totals for the conservation audit of one sequence.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MassLedger {
    pub initial_storage: f64,
    pub inflow: f64,
    pub outflow: f64,
    pub final_storage: f64,
}

impl MassLedger {
    /// `Σc_T + ΣΣh − Σc_0 − Σ mass_in`; zero up to rounding.
    pub fn residual(&self) -> f64 {
        self.final_storage + self.outflow - self.initial_storage - self.inflow
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceRun {
    /// Streamflow (or LSTM head output) at every step.
    pub q: Vec<f64>,
    pub final_state: ModelState,
    /// Present for mass-conserving models.
    pub ledger: Option<MassLedger>,
    /// Per-step stores and outflows when tracing.
    pub stores: Vec<Vec<f64>>,
    pub outflows: Vec<Vec<f64>>,
    /// Per-step gate values when tracing a mass-conserving model.
    pub gates: Vec<GateTrace>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateTrace {
    /// Input gate, cells × mass inputs, column-stochastic.
    pub input: Tensor,
    pub output: Vec<f64>,
    /// Redistribution matrix, cells × cells, column-stochastic.
    pub redistribution: Tensor,
}

/// Inputs and outputs are addressed by these names.
pub mod names {
    pub const TARGET: &str = "target";
    pub const LOSS_SCALE: &str = "loss_scale";
    pub const LOSS: &str = "loss";
    pub const C0: &str = "c0";
    pub const H0: &str = "h0";
    pub const C_FINAL: &str = "c.final";
    pub const H_FINAL: &str = "h.final";
}

/// The unrolled graph of a model over a fixed number of steps.
///
/// Built once per (layout, length) and evaluated for every sample.
#[derive(Clone, Debug)]
pub struct SequenceGraph {
    layout: Layout,
    steps: usize,
    options: SequenceOptions,
    graph: Graph,
    x_names: Vec<String>,
    a_names: Vec<String>,
    q_names: Vec<String>,
}

fn step_of(label: &str) -> Option<usize> {
    let rest = label.strip_prefix('t')?;
    let end = rest.find('/')?;
    rest[..end].parse().ok()
}

fn at_step(e: NumericsError) -> CellsError {
    let label = match &e {
        NumericsError::NonFinite { node, .. } | NumericsError::ShapeMismatch { node, .. } => {
            Some(node.as_str())
        }
        _ => None,
    };
    match label.and_then(step_of) {
        Some(step) => CellsError::AtStep { step, source: e },
        None => CellsError::Numerics(e),
    }
}

impl SequenceGraph {
    pub fn build(
        layout: &Layout,
        steps: usize,
        options: SequenceOptions,
    ) -> Result<Self, CellsError> {
        if steps == 0 {
            return Err(CellsError::EmptySequence);
        }
        match layout {
            Layout::Lstm(d) => d.validate()?,
            Layout::McLstm(d) => d.validate()?,
            Layout::FsLstm(d) => d.validate()?,
        }
        let mut g = Graph::new();
        let n_state = layout.state_width();
        let x_names: Vec<String> = (0..steps).map(|t| format!("x.{t}")).collect();
        let a_names: Vec<String> = (0..steps).map(|t| format!("a.{t}")).collect();
        let q_names: Vec<String> = (0..steps).map(|t| format!("q.{t}")).collect();
        let mut c = g.input(names::C0, &[n_state])?;
        let mut last_q = None;
        match layout {
            Layout::Lstm(d) => {
                let mut h = g.input(names::H0, &[n_state])?;
                for t in 0..steps {
                    let tag = format!("t{t}/");
                    g.set_scope(Some(tag.clone()));
                    let x = g.input(&x_names[t], &[d.mass])?;
                    let a = g.input(&a_names[t], &[d.aux])?;
                    let step = build_lstm_step(&mut g, d, h, c, x, a, &tag)?;
                    g.output(&q_names[t], step.head)?;
                    if options.trace {
                        g.output(&format!("c.{t}"), step.c)?;
                        g.output(&format!("h.{t}"), step.h)?;
                    }
                    h = step.h;
                    c = step.c;
                    last_q = Some(step.head);
                }
                g.output(names::H_FINAL, h)?;
            }
            Layout::McLstm(_) | Layout::FsLstm(_) => {
                let k = MassConstants::declare(&mut g, n_state);
                for t in 0..steps {
                    let tag = format!("t{t}/");
                    g.set_scope(Some(tag.clone()));
                    let x = g.input(&x_names[t], &[layout.mass_width()])?;
                    let a = g.input(&a_names[t], &[layout.aux_width()])?;
                    let step = match layout {
                        Layout::McLstm(d) => build_mclstm_step(&mut g, d, &k, c, x, a, &tag)?,
                        Layout::FsLstm(d) => build_fslstm_step(&mut g, d, &k, c, x, a, &tag)?,
                        Layout::Lstm(_) => unreachable!(),
                    };
                    g.output(&q_names[t], step.q)?;
                    let hsum = g.sum(step.h)?;
                    g.output(&format!("hsum.{t}"), hsum)?;
                    g.output(&format!("mass_in.{t}"), step.mass_in)?;
                    if options.trace {
                        g.output(&format!("c.{t}"), step.c_next)?;
                        g.output(&format!("h.{t}"), step.h)?;
                        g.output(&format!("i.{t}"), step.input_gate)?;
                        g.output(&format!("o.{t}"), step.output_gate)?;
                        g.output(&format!("R.{t}"), step.redistribution)?;
                    }
                    c = step.c_next;
                    last_q = Some(step.q);
                }
            }
        }
        g.set_scope(None);
        g.output(names::C_FINAL, c)?;
        if options.loss {
            let q = last_q.expect("steps >= 1");
            let target = g.input(names::TARGET, &[])?;
            let scale = g.input(names::LOSS_SCALE, &[])?;
            let err = g.sub(q, target)?;
            let scaled = g.mul(err, scale)?;
            let loss = g.square(scaled)?;
            g.set_label(loss, names::LOSS);
            g.output(names::LOSS, loss)?;
        }
        Ok(Self {
            layout: *layout,
            steps,
            options,
            graph: g,
            x_names,
            a_names,
            q_names,
        })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    /// Validates and binds an initial state and per-step inputs.
    pub fn bindings(
        &self,
        initial: &ModelState,
        inputs: &[StepInput<'_>],
    ) -> Result<Bindings, CellsError> {
        if inputs.len() != self.steps {
            return Err(CellsError::Length {
                what: "time steps",
                expected: self.steps,
                found: inputs.len(),
            });
        }
        let n_state = self.layout.state_width();
        let mut b = Bindings::new();
        match (initial, &self.layout) {
            (ModelState::Lstm(s), Layout::Lstm(_)) => {
                check_len("initial h", n_state, s.h.len())?;
                check_len("initial c", n_state, s.c.len())?;
                b.insert(names::H0.into(), Tensor::vector(s.h.clone()));
                b.insert(names::C0.into(), Tensor::vector(s.c.clone()));
            }
            (ModelState::Mass(s), Layout::McLstm(_) | Layout::FsLstm(_)) => {
                check_len("initial store", n_state, s.c.len())?;
                if let Some(i) = s.c.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(CellsError::InvalidState {
                        index: i,
                        value: s.c[i],
                    });
                }
                b.insert(names::C0.into(), Tensor::vector(s.c.clone()));
            }
            _ => return Err(CellsError::StateKind(self.layout.kind())),
        }
        let mass_must_be_nonnegative = matches!(self.layout, Layout::McLstm(_));
        for (t, step) in inputs.iter().enumerate() {
            check_len("mass input", self.layout.mass_width(), step.mass.len())?;
            check_len("auxiliary input", self.layout.aux_width(), step.aux.len())?;
            for (i, &v) in step.mass.iter().enumerate() {
                if !v.is_finite() || (mass_must_be_nonnegative && v < 0.0) {
                    return Err(CellsError::InvalidMass {
                        step: t,
                        index: i,
                        value: v,
                    });
                }
            }
            if let Some(i) = step.aux.iter().position(|v| !v.is_finite()) {
                return Err(CellsError::NonFiniteInput { step: t, index: i });
            }
            b.insert(self.x_names[t].clone(), Tensor::vector(step.mass.to_vec()));
            b.insert(self.a_names[t].clone(), Tensor::vector(step.aux.to_vec()));
        }
        Ok(b)
    }

    /// Evaluates the graph, recycling `ws`.
    pub fn evaluate(
        &self,
        params: &ParamSet,
        bindings: &Bindings,
        ws: Workspace,
    ) -> Result<Evaluation<'_>, CellsError> {
        self.graph.forward_in(ws, bindings, params).map_err(at_step)
    }

    /// Evaluates without retaining values for gradients.
    pub fn infer(
        &self,
        params: &ParamSet,
        bindings: &Bindings,
        ws: Workspace,
    ) -> Result<Evaluation<'_>, CellsError> {
        self.graph.infer_in(ws, bindings, params).map_err(at_step)
    }

    pub fn run(
        &self,
        params: &ParamSet,
        initial: &ModelState,
        inputs: &[StepInput<'_>],
    ) -> Result<SequenceRun, CellsError> {
        let mut b = self.bindings(initial, inputs)?;
        if self.options.loss {
            b.insert(names::TARGET.into(), Tensor::scalar(0.0));
            b.insert(names::LOSS_SCALE.into(), Tensor::scalar(1.0));
        }
        let eval = self.infer(params, &b, Workspace::default())?;
        self.collect(&eval, initial)
    }

    /// Final streamflow of an evaluated graph.
    pub fn final_q(&self, eval: &Evaluation<'_>) -> Result<f64, CellsError> {
        Ok(eval.output(&self.q_names[self.steps - 1])?[0])
    }

    fn collect(
        &self,
        eval: &Evaluation<'_>,
        initial: &ModelState,
    ) -> Result<SequenceRun, CellsError> {
        let q = self
            .q_names
            .iter()
            .map(|n| Ok(eval.output(n)?[0]))
            .collect::<Result<Vec<_>, NumericsError>>()?;
        let c_final = eval.output(names::C_FINAL)?.to_vec();
        let (final_state, ledger) = match initial {
            ModelState::Lstm(_) => {
                let h = eval.output(names::H_FINAL)?.to_vec();
                (ModelState::Lstm(LstmState { h, c: c_final }), None)
            }
            ModelState::Mass(c0) => {
                let mut ledger = MassLedger {
                    initial_storage: c0.total(),
                    final_storage: c_final.iter().sum(),
                    ..Default::default()
                };
                for t in 0..self.steps {
                    ledger.outflow += eval.output(&format!("hsum.{t}"))?[0];
                    ledger.inflow += eval.output(&format!("mass_in.{t}"))?[0];
                }
                (ModelState::Mass(CellState { c: c_final }), Some(ledger))
            }
        };
        let (mut stores, mut outflows, mut gates) = (Vec::new(), Vec::new(), Vec::new());
        if self.options.trace {
            for t in 0..self.steps {
                stores.push(eval.output(&format!("c.{t}"))?.to_vec());
                outflows.push(eval.output(&format!("h.{t}"))?.to_vec());
                if !matches!(self.layout, Layout::Lstm(_)) {
                    gates.push(GateTrace {
                        input: eval.output_tensor(&format!("i.{t}"))?,
                        output: eval.output(&format!("o.{t}"))?.to_vec(),
                        redistribution: eval.output_tensor(&format!("R.{t}"))?,
                    });
                }
            }
        }
        Ok(SequenceRun {
            q,
            final_state,
            ledger,
            stores,
            outflows,
            gates,
        })
    }

    pub(crate) fn single_step(
        &self,
        params: &ParamSet,
        c_prev: &CellState,
        input: StepInput<'_>,
    ) -> Result<StepOutput, CellsError> {
        let run = self.run(params, &ModelState::Mass(c_prev.clone()), &[input])?;
        let ledger = run.ledger.expect("mass-conserving layout");
        let ModelState::Mass(c_next) = run.final_state else {
            unreachable!("mass-conserving layout")
        };
        Ok(StepOutput {
            c_next,
            h: run.outflows.into_iter().next().unwrap_or_default(),
            q: run.q[0],
            mass_in: ledger.inflow,
        })
    }
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<(), CellsError> {
    if expected != found {
        return Err(CellsError::Length {
            what,
            expected,
            found,
        });
    }
    Ok(())
}

/// Runs `model` over `inputs` from `initial`.
pub fn run_sequence(
    model: &Model,
    initial: &ModelState,
    inputs: &[StepInput<'_>],
) -> Result<SequenceRun, CellsError> {
    let seq = SequenceGraph::build(&model.layout(), inputs.len(), SequenceOptions::trace())?;
    seq.run(model.params(), initial, inputs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_index_is_parsed_from_labels() {
        assert_eq!(step_of("t12/m_tot"), Some(12));
        assert_eq!(step_of("loss"), None);
        assert_eq!(step_of("tanh#3"), None);
    }

    #[test]
    fn zero_length_sequence_is_rejected() {
        let layout = Layout::McLstm(McLstmDims {
            cells: 2,
            aux: 1,
            mass: 1,
        });
        assert!(matches!(
            SequenceGraph::build(&layout, 0, SequenceOptions::default()),
            Err(CellsError::EmptySequence)
        ));
    }
}
