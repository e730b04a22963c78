//! Dense `f64` tensors and a define-then-run reverse-mode engine.
//!
//! A [`Graph`] records a fixed set of primitives (matrix-vector product,
//! elementwise add/sub/mul, sigmoid, tanh, square, column softmax, sum,
//! concatenation and L1 normalisation). Evaluating it yields an
//! [`Evaluation`] that can be differentiated with respect to the
//! parameters in a [`ParamSet`]. [`finite_difference_check`] is the
//! independent oracle for every gradient in the crate.

mod check;
mod graph;
mod kernels;
mod params;
mod tensor;

use alloc::string::String;
use alloc::vec::Vec;

pub use check::{finite_difference_check, GradientCheck, RELATIVE_ERROR_FLOOR};
pub use graph::{Bindings, Evaluation, Graph, NodeId, Workspace, L1_NORM_GUARD};
pub use params::{Gradients, Param, ParamCount, ParamRole, ParamSet};
pub use tensor::Tensor;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumericsError {
    #[error("shape {shape:?} needs a different element count than {found}")]
    ElementCount { shape: Vec<usize>, found: usize },
    #[error("shape mismatch at `{node}`: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        node: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("non-finite value at `{node}` (element {index})")]
    NonFinite { node: String, index: usize },
    #[error("no value bound for input `{0}`")]
    MissingInput(String),
    #[error("parameter `{0}` not found")]
    MissingParam(String),
    #[error("name `{0}` is already taken")]
    DuplicateName(String),
    #[error("unknown output `{0}`")]
    UnknownOutput(String),
    #[error("node #{0} does not belong to this graph")]
    UnknownNode(usize),
    #[error("output `{name}` is not scalar (shape {shape:?})")]
    NotScalar { name: String, shape: Vec<usize> },
    #[error("finite-difference step must be positive and finite, got {0}")]
    InvalidEpsilon(f64),
    #[error("evaluation was made without retaining values for backward")]
    ForwardOnly,
}
