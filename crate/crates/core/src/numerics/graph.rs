use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::kernels;
use super::tensor::numel;
use super::{Gradients, NumericsError, ParamSet, Tensor};
use crate::math;

/// Input values keyed by the name given to [`Graph::input`].
pub type Bindings = BTreeMap<String, Tensor>;

/// Inputs whose L1 norm falls below this map to the zero vector.
pub const L1_NORM_GUARD: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Op {
    Input(String),
    Param(String),
    Constant(Tensor),
    /// Contracts the last axis of the left operand with a vector.
    MatVec(NodeId, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Sigmoid(NodeId),
    Tanh(NodeId),
    Square(NodeId),
    /// Softmax down each column of a matrix; a vector is one column.
    ColSoftmax(NodeId),
    Sum(NodeId),
    Concat(Vec<NodeId>),
    /// `x / sum(|x|)`, or zero below [`L1_NORM_GUARD`].
    L1Normalize(NodeId),
}

impl Op {
    fn mnemonic(&self) -> &'static str {
        match self {
            Op::Input(_) => "input",
            Op::Param(_) => "param",
            Op::Constant(_) => "const",
            Op::MatVec(..) => "matvec",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Sigmoid(_) => "sigmoid",
            Op::Tanh(_) => "tanh",
            Op::Square(_) => "square",
            Op::ColSoftmax(_) => "col_softmax",
            Op::Sum(_) => "sum",
            Op::Concat(_) => "concat",
            Op::L1Normalize(_) => "l1_normalize",
        }
    }

    fn for_each_operand(&self, mut f: impl FnMut(NodeId)) {
        match self {
            Op::Input(_) | Op::Param(_) | Op::Constant(_) => {}
            Op::MatVec(a, b) | Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) => {
                f(*a);
                f(*b);
            }
            Op::Sigmoid(a)
            | Op::Tanh(a)
            | Op::Square(a)
            | Op::ColSoftmax(a)
            | Op::Sum(a)
            | Op::L1Normalize(a) => f(*a),
            Op::Concat(parts) => parts.iter().copied().for_each(f),
        }
    }
}

#[derive(Clone, Debug)]
struct Node {
    op: Op,
    shape: Vec<usize>,
    label: Option<String>,
    consumers: usize,
    /// Value must survive the forward pass (backward or caller reads it).
    keep: bool,
    /// Registered as a named output.
    output: bool,
    /// Depends on at least one parameter.
    requires_grad: bool,
}

/// A recorded expression over the closed primitive set.
///
/// Nodes are appended in evaluation order, so the record is its own
/// topological sort. A graph is immutable once built and can be evaluated
/// any number of times, from any number of threads, through [`Graph::forward`].
#[derive(Clone, Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    inputs: BTreeMap<String, NodeId>,
    params: BTreeMap<String, NodeId>,
    outputs: BTreeMap<String, NodeId>,
    scope: Option<String>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn shape(&self, id: NodeId) -> &[usize] {
        &self.nodes[id.0].shape
    }

    pub fn label(&self, id: NodeId) -> String {
        let node = &self.nodes[id.0];
        match (&node.label, &node.op) {
            (Some(l), _) => l.clone(),
            (None, Op::Input(n)) | (None, Op::Param(n)) => n.clone(),
            (None, op) => format!("{}#{}", op.mnemonic(), id.0),
        }
    }

    /// Prefixes the default label of every node built from now on, so an
    /// unnamed node still reports where it belongs.
    pub fn set_scope(&mut self, scope: Option<String>) {
        self.scope = scope;
    }

    /// Attaches a human-readable name used in error messages.
    pub fn set_label(&mut self, id: NodeId, label: impl Into<String>) {
        self.nodes[id.0].label = Some(label.into());
    }

    pub fn input_names(&self) -> impl Iterator<Item = &str> {
        self.inputs.keys().map(String::as_str)
    }

    pub fn param_names(&self) -> impl Iterator<Item = &str> {
        self.params.keys().map(String::as_str)
    }

    pub fn output_names(&self) -> impl Iterator<Item = &str> {
        self.outputs.keys().map(String::as_str)
    }

    pub fn output_node(&self, name: &str) -> Option<NodeId> {
        self.outputs.get(name).copied()
    }

    fn push(&mut self, op: Op, shape: Vec<usize>) -> NodeId {
        let id = NodeId(self.nodes.len());
        let mut requires_grad = matches!(op, Op::Param(_));
        op.for_each_operand(|x| {
            self.nodes[x.0].consumers += 1;
            requires_grad |= self.nodes[x.0].requires_grad;
        });
        // Record which values the backward rule of this op reads.
        let keep_self = matches!(
            op,
            Op::Input(_)
                | Op::Param(_)
                | Op::Constant(_)
                | Op::Sigmoid(_)
                | Op::Tanh(_)
                | Op::ColSoftmax(_)
                | Op::L1Normalize(_)
        );
        match &op {
            Op::MatVec(a, b) | Op::Mul(a, b) => {
                self.nodes[a.0].keep = true;
                self.nodes[b.0].keep = true;
            }
            Op::Square(a) | Op::L1Normalize(a) => self.nodes[a.0].keep = true,
            _ => {}
        }
        let label = match (&self.scope, &op) {
            (_, Op::Input(_) | Op::Param(_) | Op::Constant(_)) | (None, _) => None,
            (Some(scope), op) => Some(format!("{scope}{}#{}", op.mnemonic(), id.0)),
        };
        self.nodes.push(Node {
            op,
            shape,
            label,
            consumers: 0,
            keep: keep_self,
            output: false,
            requires_grad,
        });
        id
    }

    fn check(&self, id: NodeId) -> Result<(), NumericsError> {
        if id.0 >= self.nodes.len() {
            return Err(NumericsError::UnknownNode(id.0));
        }
        Ok(())
    }

    fn mismatch(&self, at: NodeId, expected: &[usize], found: &[usize]) -> NumericsError {
        NumericsError::ShapeMismatch {
            node: self.label(at),
            expected: expected.into(),
            found: found.into(),
        }
    }

    /// Declares a named input of fixed shape.
    pub fn input(&mut self, name: &str, shape: &[usize]) -> Result<NodeId, NumericsError> {
        if self.inputs.contains_key(name) {
            return Err(NumericsError::DuplicateName(name.to_string()));
        }
        let id = self.push(Op::Input(name.to_string()), shape.into());
        self.inputs.insert(name.to_string(), id);
        Ok(id)
    }

    /// Declares a parameter read from the [`ParamSet`] at evaluation time.
    ///
    /// Declaring the same name twice returns the existing node, so step
    /// builders can share weights across time without bookkeeping.
    pub fn param(&mut self, name: &str, shape: &[usize]) -> Result<NodeId, NumericsError> {
        if let Some(&id) = self.params.get(name) {
            if self.nodes[id.0].shape != shape {
                return Err(self.mismatch(id, &self.nodes[id.0].shape.clone(), shape));
            }
            return Ok(id);
        }
        let id = self.push(Op::Param(name.to_string()), shape.into());
        self.params.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn constant(&mut self, value: Tensor) -> NodeId {
        let shape = value.shape().to_vec();
        self.push(Op::Constant(value), shape)
    }

    /// Registers `node` as a named output; its value is retained after forward.
    pub fn output(&mut self, name: &str, node: NodeId) -> Result<(), NumericsError> {
        self.check(node)?;
        if self.outputs.contains_key(name) {
            return Err(NumericsError::DuplicateName(name.to_string()));
        }
        self.nodes[node.0].keep = true;
        self.nodes[node.0].output = true;
        self.outputs.insert(name.to_string(), node);
        Ok(())
    }

    pub fn matvec(&mut self, lhs: NodeId, rhs: NodeId) -> Result<NodeId, NumericsError> {
        self.check(lhs)?;
        self.check(rhs)?;
        let ls = self.nodes[lhs.0].shape.clone();
        let rs = self.nodes[rhs.0].shape.clone();
        let Some((&k, outer)) = ls.split_last() else {
            return Err(self.mismatch(lhs, &[0], &ls));
        };
        if rs.len() > 1 || numel(&rs) != k {
            return Err(self.mismatch(rhs, &[k], &rs));
        }
        Ok(self.push(Op::MatVec(lhs, rhs), outer.to_vec()))
    }

    fn elementwise(&mut self, a: NodeId, b: NodeId, op: Op) -> Result<NodeId, NumericsError> {
        self.check(a)?;
        self.check(b)?;
        let sa = self.nodes[a.0].shape.clone();
        if self.nodes[b.0].shape != sa {
            return Err(self.mismatch(b, &sa, &self.nodes[b.0].shape.clone()));
        }
        Ok(self.push(op, sa))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NumericsError> {
        self.elementwise(a, b, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NumericsError> {
        self.elementwise(a, b, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NumericsError> {
        self.elementwise(a, b, Op::Mul(a, b))
    }

    fn unary(&mut self, a: NodeId, op: Op) -> Result<NodeId, NumericsError> {
        self.check(a)?;
        let shape = self.nodes[a.0].shape.clone();
        Ok(self.push(op, shape))
    }

    pub fn sigmoid(&mut self, a: NodeId) -> Result<NodeId, NumericsError> {
        self.unary(a, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: NodeId) -> Result<NodeId, NumericsError> {
        self.unary(a, Op::Tanh(a))
    }

    pub fn square(&mut self, a: NodeId) -> Result<NodeId, NumericsError> {
        self.unary(a, Op::Square(a))
    }

    pub fn l1_normalize(&mut self, a: NodeId) -> Result<NodeId, NumericsError> {
        self.unary(a, Op::L1Normalize(a))
    }

    pub fn col_softmax(&mut self, a: NodeId) -> Result<NodeId, NumericsError> {
        self.check(a)?;
        let shape = self.nodes[a.0].shape.clone();
        if shape.is_empty() || shape.len() > 2 {
            return Err(self.mismatch(a, &[0, 0], &shape));
        }
        Ok(self.push(Op::ColSoftmax(a), shape))
    }

    pub fn sum(&mut self, a: NodeId) -> Result<NodeId, NumericsError> {
        self.check(a)?;
        Ok(self.push(Op::Sum(a), Vec::new()))
    }

    /// Flat concatenation of scalars and vectors.
    pub fn concat(&mut self, parts: &[NodeId]) -> Result<NodeId, NumericsError> {
        let mut total = 0;
        for &p in parts {
            self.check(p)?;
            let s = &self.nodes[p.0].shape;
            if s.len() > 1 {
                return Err(self.mismatch(p, &[numel(s)], &s.clone()));
            }
            total += numel(s);
        }
        Ok(self.push(Op::Concat(parts.to_vec()), vec![total]))
    }

    /// Evaluates every node with fresh buffers.
    pub fn forward(
        &self,
        inputs: &Bindings,
        params: &ParamSet,
    ) -> Result<Evaluation<'_>, NumericsError> {
        self.forward_in(Workspace::default(), inputs, params)
    }

    /// Evaluates every node, recycling the buffers held by `workspace`.
    pub fn forward_in(
        &self,
        ws: Workspace,
        inputs: &Bindings,
        params: &ParamSet,
    ) -> Result<Evaluation<'_>, NumericsError> {
        self.run(ws, inputs, params, true)
    }

    /// Like [`Graph::forward_in`] but releases every intermediate value as
    /// soon as its last consumer has run. Only outputs can be read back and
    /// [`Evaluation::backward`] is unavailable.
    pub fn infer_in(
        &self,
        ws: Workspace,
        inputs: &Bindings,
        params: &ParamSet,
    ) -> Result<Evaluation<'_>, NumericsError> {
        self.run(ws, inputs, params, false)
    }

    fn run(
        &self,
        mut ws: Workspace,
        inputs: &Bindings,
        params: &ParamSet,
        differentiable: bool,
    ) -> Result<Evaluation<'_>, NumericsError> {
        ws.reset(self.nodes.len());
        let mut remaining: Vec<usize> = self.nodes.iter().map(|n| n.consumers).collect();
        for (idx, node) in self.nodes.iter().enumerate() {
            let id = NodeId(idx);
            let n = numel(&node.shape);
            let out = match &node.op {
                Op::Input(name) => {
                    let t = inputs
                        .get(name)
                        .ok_or_else(|| NumericsError::MissingInput(name.clone()))?;
                    if t.shape() != node.shape.as_slice() {
                        return Err(self.mismatch(id, &node.shape, t.shape()));
                    }
                    let mut buf = ws.take(n);
                    buf.copy_from_slice(t.values());
                    buf
                }
                Op::Param(name) => {
                    let t = params
                        .tensor(name)
                        .ok_or_else(|| NumericsError::MissingParam(name.clone()))?;
                    if t.shape() != node.shape.as_slice() {
                        return Err(self.mismatch(id, &node.shape, t.shape()));
                    }
                    let mut buf = ws.take(n);
                    buf.copy_from_slice(t.values());
                    buf
                }
                Op::Constant(t) => {
                    let mut buf = ws.take(n);
                    buf.copy_from_slice(t.values());
                    buf
                }
                op => {
                    let mut buf = ws.take(n);
                    self.eval_op(op, &ws.values, &mut buf);
                    buf
                }
            };
            if !kernels::all_finite(&out) {
                let bad = out.iter().position(|v| !v.is_finite()).unwrap_or(0);
                return Err(NumericsError::NonFinite {
                    node: self.label(id),
                    index: bad,
                });
            }
            ws.values[idx] = Some(out);
            node.op.for_each_operand(|x| {
                remaining[x.0] -= 1;
                let retained = if differentiable {
                    self.nodes[x.0].keep
                } else {
                    self.nodes[x.0].output
                };
                if remaining[x.0] == 0 && !retained {
                    if let Some(buf) = ws.values[x.0].take() {
                        ws.give(buf);
                    }
                }
            });
        }
        let trainable = params
            .trainable()
            .map(|(k, t)| (k.to_string(), t.shape().to_vec()))
            .collect();
        Ok(Evaluation {
            graph: self,
            trainable,
            ws,
            differentiable,
        })
    }

    fn eval_op(&self, op: &Op, values: &[Option<Vec<f64>>], out: &mut [f64]) {
        let val = |id: &NodeId| -> &[f64] {
            values[id.0]
                .as_deref()
                .expect("operand evaluated before its consumer")
        };
        match op {
            Op::Input(_) | Op::Param(_) | Op::Constant(_) => {
                unreachable!("leaves handled by caller")
            }
            Op::MatVec(a, b) => {
                let lhs = val(a);
                let rhs = val(b);
                kernels::matvec(out, lhs, rhs);
            }
            Op::Add(a, b) => {
                for ((o, x), y) in out.iter_mut().zip(val(a)).zip(val(b)) {
                    *o = x + y;
                }
            }
            Op::Sub(a, b) => {
                for ((o, x), y) in out.iter_mut().zip(val(a)).zip(val(b)) {
                    *o = x - y;
                }
            }
            Op::Mul(a, b) => {
                for ((o, x), y) in out.iter_mut().zip(val(a)).zip(val(b)) {
                    *o = x * y;
                }
            }
            Op::Sigmoid(a) => {
                for (o, x) in out.iter_mut().zip(val(a)) {
                    *o = math::sigmoid(*x);
                }
            }
            Op::Tanh(a) => {
                for (o, x) in out.iter_mut().zip(val(a)) {
                    *o = math::tanh(*x);
                }
            }
            Op::Square(a) => {
                for (o, x) in out.iter_mut().zip(val(a)) {
                    *o = x * x;
                }
            }
            Op::ColSoftmax(a) => {
                let cols = self.columns(*a);
                col_softmax(val(a), cols, out);
            }
            Op::Sum(a) => out[0] = val(a).iter().sum(),
            Op::Concat(parts) => {
                let mut at = 0;
                for p in parts {
                    let v = val(p);
                    out[at..at + v.len()].copy_from_slice(v);
                    at += v.len();
                }
            }
            Op::L1Normalize(a) => {
                let x = val(a);
                let norm: f64 = x.iter().map(|v| v.abs()).sum();
                if norm < L1_NORM_GUARD {
                    out.fill(0.0);
                } else {
                    for (o, v) in out.iter_mut().zip(x) {
                        *o = v / norm;
                    }
                }
            }
        }
    }

    fn columns(&self, id: NodeId) -> usize {
        let s = &self.nodes[id.0].shape;
        if s.len() == 2 {
            s[1]
        } else {
            1
        }
    }
}

fn col_softmax(x: &[f64], cols: usize, out: &mut [f64]) {
    if x.is_empty() {
        return;
    }
    let mut max = vec![f64::NEG_INFINITY; cols];
    for row in x.chunks_exact(cols) {
        for (m, v) in max.iter_mut().zip(row) {
            *m = m.max(*v);
        }
    }
    for (orow, row) in out.chunks_exact_mut(cols).zip(x.chunks_exact(cols)) {
        for ((o, v), m) in orow.iter_mut().zip(row).zip(&max) {
            *o = v - m;
        }
    }
    kernels::exp_in_place(out);
    let mut total = vec![0.0; cols];
    for orow in out.chunks_exact(cols) {
        for (t, o) in total.iter_mut().zip(orow) {
            *t += o;
        }
    }
    for t in total.iter_mut() {
        *t = 1.0 / *t;
    }
    for orow in out.chunks_exact_mut(cols) {
        for (o, t) in orow.iter_mut().zip(&total) {
            *o *= t;
        }
    }
}

/// Reusable value and gradient buffers for repeated evaluations of a graph.
#[derive(Debug, Default)]
pub struct Workspace {
    values: Vec<Option<Vec<f64>>>,
    pool: Pool,
}

impl Workspace {
    fn reset(&mut self, nodes: usize) {
        let old = core::mem::take(&mut self.values);
        for buf in old.into_iter().flatten() {
            self.pool.give(buf);
        }
        self.values.resize_with(nodes, || None);
    }

    fn take(&mut self, n: usize) -> Vec<f64> {
        self.pool.take(n)
    }

    fn give(&mut self, buf: Vec<f64>) {
        self.pool.give(buf);
    }
}

/// Spare buffers bucketed by length.
#[derive(Debug, Default)]
struct Pool(BTreeMap<usize, Vec<Vec<f64>>>);

impl Pool {
    /// A buffer of length `n`; contents are unspecified.
    fn take(&mut self, n: usize) -> Vec<f64> {
        match self.0.get_mut(&n).and_then(Vec::pop) {
            Some(buf) => buf,
            None => vec![0.0; n],
        }
    }

    fn give(&mut self, buf: Vec<f64>) {
        self.0.entry(buf.len()).or_default().push(buf);
    }
}

/// Node values from one forward pass.
#[derive(Debug)]
pub struct Evaluation<'g> {
    graph: &'g Graph,
    /// Names and shapes of the trainable parameters at forward time.
    trainable: Vec<(String, Vec<usize>)>,
    ws: Workspace,
    differentiable: bool,
}

impl<'g> Evaluation<'g> {
    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    /// Values of a named output.
    pub fn output(&self, name: &str) -> Result<&[f64], NumericsError> {
        let id = self
            .graph
            .output_node(name)
            .ok_or_else(|| NumericsError::UnknownOutput(name.to_string()))?;
        Ok(self.ws.values[id.0]
            .as_deref()
            .expect("outputs are retained"))
    }

    pub fn output_tensor(&self, name: &str) -> Result<Tensor, NumericsError> {
        let id = self
            .graph
            .output_node(name)
            .ok_or_else(|| NumericsError::UnknownOutput(name.to_string()))?;
        Tensor::new(self.graph.shape(id).to_vec(), self.output(name)?.to_vec())
    }

    pub fn outputs(&self) -> Result<BTreeMap<String, Tensor>, NumericsError> {
        self.graph
            .output_names()
            .map(|n| Ok((n.to_string(), self.output_tensor(n)?)))
            .collect()
    }

    /// Value of a retained node, if it survived the forward pass.
    pub fn value(&self, id: NodeId) -> Option<&[f64]> {
        self.ws.values.get(id.0).and_then(|v| v.as_deref())
    }

    /// Releases the buffers for reuse by [`Graph::forward_in`].
    pub fn into_workspace(self) -> Workspace {
        self.ws
    }

    /// Reverse-mode gradient of a scalar output with respect to every
    /// trainable entry of the parameter set used in the forward pass.
    ///
    /// Takes `&mut self` only to recycle scratch buffers; node values are
    /// untouched, so repeated calls return identical gradients.
    pub fn backward(&mut self, output: &str) -> Result<Gradients, NumericsError> {
        if !self.differentiable {
            return Err(NumericsError::ForwardOnly);
        }
        let graph = self.graph;
        let root = graph
            .output_node(output)
            .ok_or_else(|| NumericsError::UnknownOutput(output.to_string()))?;
        if numel(graph.shape(root)) != 1 {
            return Err(NumericsError::NotScalar {
                name: output.to_string(),
                shape: graph.shape(root).to_vec(),
            });
        }
        let Workspace { values, pool } = &mut self.ws;
        let mut grads: Vec<Option<Vec<f64>>> = Vec::new();
        grads.resize_with(root.0 + 1, || None);
        grads[root.0] = Some(vec![1.0]);
        let mut param_grads: BTreeMap<&str, Vec<f64>> = BTreeMap::new();

        for idx in (0..=root.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            match &graph.nodes[idx].op {
                Op::Param(name) => {
                    param_grads.insert(name.as_str(), g);
                    continue;
                }
                Op::Input(_) | Op::Constant(_) => {}
                op => propagate(graph, values, pool, op, idx, &g, &mut grads),
            }
            pool.give(g);
        }

        let mut out = Gradients::new();
        for (name, shape) in &self.trainable {
            let values = match param_grads.remove(name.as_str()) {
                Some(v) => v,
                None => vec![0.0; numel(shape)],
            };
            out.insert(name, Tensor::new(shape.clone(), values)?);
        }
        Ok(out)
    }
}

/// Adds the contribution of node `idx` (with upstream gradient `g`) to the
/// gradients of its operands.
fn propagate(
    graph: &Graph,
    values: &[Option<Vec<f64>>],
    pool: &mut Pool,
    op: &Op,
    idx: usize,
    g: &[f64],
    grads: &mut [Option<Vec<f64>>],
) {
    let nodes = &graph.nodes;
    let val = |id: NodeId| -> &[f64] {
        values[id.0]
            .as_deref()
            .expect("value retained for backward")
    };
    // Gradient buffer of an operand, allocated on first touch; `None` when
    // the operand does not lead back to any parameter. The closure gets
    // `fresh = true` when the buffer holds garbage and must be overwritten.
    let mut acc =
        |id: NodeId, grads: &mut [Option<Vec<f64>>], f: &mut dyn FnMut(&mut [f64], bool)| {
            if !nodes[id.0].requires_grad {
                return;
            }
            let slot = &mut grads[id.0];
            match slot {
                Some(buf) => f(buf, false),
                None => {
                    let mut buf = pool.take(numel(&nodes[id.0].shape));
                    f(&mut buf, true);
                    *slot = Some(buf);
                }
            }
        };
    // `d = v` on a fresh buffer, `d += v` otherwise.
    fn put(d: &mut [f64], fresh: bool, v: impl Iterator<Item = f64>) {
        if fresh {
            d.iter_mut().zip(v).for_each(|(d, v)| *d = v);
        } else {
            d.iter_mut().zip(v).for_each(|(d, v)| *d += v);
        }
    }
    match *op {
        Op::Input(_) | Op::Param(_) | Op::Constant(_) => {}
        Op::MatVec(a, b) => {
            let k = numel(&nodes[b.0].shape);
            if k == 0 {
                return;
            }
            acc(a, grads, &mut |da, fresh| {
                if fresh {
                    da.fill(0.0);
                }
                kernels::outer_acc(da, g, &val(b)[..k])
            });
            acc(b, grads, &mut |db, fresh| {
                if fresh {
                    db.fill(0.0);
                }
                kernels::transpose_acc(&mut db[..k], val(a), g)
            });
        }
        Op::Add(a, b) => {
            acc(a, grads, &mut |da, fresh| put(da, fresh, g.iter().copied()));
            acc(b, grads, &mut |db, fresh| put(db, fresh, g.iter().copied()));
        }
        Op::Sub(a, b) => {
            acc(a, grads, &mut |da, fresh| put(da, fresh, g.iter().copied()));
            acc(b, grads, &mut |db, fresh| {
                put(db, fresh, g.iter().map(|v| -v))
            });
        }
        Op::Mul(a, b) => {
            acc(a, grads, &mut |da, fresh| {
                put(da, fresh, g.iter().zip(val(b)).map(|(go, y)| go * y))
            });
            acc(b, grads, &mut |db, fresh| {
                put(db, fresh, g.iter().zip(val(a)).map(|(go, x)| go * x))
            });
        }
        Op::Sigmoid(a) => {
            let y = val(NodeId(idx));
            acc(a, grads, &mut |da, fresh| {
                put(da, fresh, g.iter().zip(y).map(|(go, y)| go * y * (1.0 - y)))
            });
        }
        Op::Tanh(a) => {
            let y = val(NodeId(idx));
            acc(a, grads, &mut |da, fresh| {
                put(da, fresh, g.iter().zip(y).map(|(go, y)| go * (1.0 - y * y)))
            });
        }
        Op::Square(a) => {
            acc(a, grads, &mut |da, fresh| {
                put(da, fresh, g.iter().zip(val(a)).map(|(go, x)| 2.0 * x * go))
            });
        }
        Op::ColSoftmax(a) => {
            let cols = graph.columns(a);
            let y = val(NodeId(idx));
            let mut dot = vec![0.0; cols];
            for (yr, gr) in y.chunks_exact(cols).zip(g.chunks_exact(cols)) {
                for ((s, yv), gv) in dot.iter_mut().zip(yr).zip(gr) {
                    *s += yv * gv;
                }
            }
            acc(a, grads, &mut |da, fresh| {
                for ((dr, yr), gr) in da
                    .chunks_exact_mut(cols)
                    .zip(y.chunks_exact(cols))
                    .zip(g.chunks_exact(cols))
                {
                    let v = yr
                        .iter()
                        .zip(gr)
                        .zip(&dot)
                        .map(|((yv, gv), s)| yv * (gv - s));
                    put(dr, fresh, v);
                }
            });
        }
        Op::L1Normalize(a) => {
            let x = val(a);
            let norm: f64 = x.iter().map(|v| v.abs()).sum();
            if norm < L1_NORM_GUARD {
                return;
            }
            let gx: f64 = g.iter().zip(x).map(|(go, xv)| go * xv).sum();
            let corr = gx / (norm * norm);
            acc(a, grads, &mut |da, fresh| {
                put(
                    da,
                    fresh,
                    g.iter()
                        .zip(x)
                        .map(|(go, xv)| go / norm - signum(*xv) * corr),
                )
            });
        }
        Op::Sum(a) => {
            acc(a, grads, &mut |da, fresh| {
                put(da, fresh, core::iter::repeat(g[0]))
            });
        }
        Op::Concat(ref parts) => {
            let mut at = 0;
            for &p in parts {
                let n = numel(&nodes[p.0].shape);
                let seg = &g[at..at + n];
                acc(p, grads, &mut |dp, fresh| {
                    put(dp, fresh, seg.iter().copied())
                });
                at += n;
            }
        }
    }
}

fn signum(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
