//! Recurrent cells and sequence runners.
//!
//! Every cell is expressed as a small subgraph over the primitives in
//! [`crate::numerics`], so one code path serves forward evaluation,
//! training gradients and the finite-difference audit.
//!
//! Mass-conserving cells ([`McLstmParams`], [`FsLstmParams`]) keep a
//! nonnegative store `c` per cell. Each step redistributes the old store
//! with a column-stochastic matrix `R`, distributes new mass with a
//! column-stochastic input matrix `i`, and releases a fraction `o` of the
//! total as outflow `h`. The last cell is a trash cell whose outflow is
//! excluded from streamflow.

mod accounting;
mod fastslow;
mod fslstm;
mod init;
mod lstm;
mod mclstm;
mod sequence;

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::numerics::NumericsError;

pub use accounting::{max_projection_dim, param_count_actual, param_count_formula};
pub use fastslow::{build_fastslow, fastslow_forward, FastSlowParams, FASTSLOW_PREFIX};
pub use fslstm::{fslstm_step, FsLstmDims, FsLstmParams};
pub use lstm::{vanilla_lstm_step, LstmDims, LstmParams, LstmState};
pub use mclstm::{mclstm_step, McLstmDims, McLstmParams};
pub use sequence::{
    names, run_sequence, GateTrace, Layout, MassLedger, Model, ModelState, SequenceGraph,
    SequenceOptions, SequenceRun, StepInput,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lstm,
    McLstm,
    FsLstm,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Lstm => "lstm",
            ModelKind::McLstm => "mclstm",
            ModelKind::FsLstm => "fslstm",
        }
    }

    pub fn is_mass_conserving(self) -> bool {
        !matches!(self, ModelKind::Lstm)
    }
}

impl core::str::FromStr for ModelKind {
    type Err = CellsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lstm" => Ok(ModelKind::Lstm),
            "mclstm" => Ok(ModelKind::McLstm),
            "fslstm" => Ok(ModelKind::FsLstm),
            other => Err(CellsError::UnknownModel(other.into())),
        }
    }
}

impl core::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

/// Stored mass per cell (mm).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellState {
    pub c: Vec<f64>,
}

impl CellState {
    pub fn zeros(cells: usize) -> Self {
        Self {
            c: alloc::vec![0.0; cells],
        }
    }

    pub fn new(c: Vec<f64>) -> Result<Self, CellsError> {
        if let Some(i) = c.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(CellsError::InvalidState {
                index: i,
                value: c[i],
            });
        }
        Ok(Self { c })
    }

    pub fn total(&self) -> f64 {
        self.c.iter().sum()
    }
}

/// Result of one mass-conserving step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutput {
    pub c_next: CellState,
    /// Outflow per cell (mm/day).
    pub h: Vec<f64>,
    /// Streamflow: outflow of every cell but the last (mm/day).
    pub q: f64,
    /// Mass added this step (mm/day).
    pub mass_in: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CellsError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: NumericsError,
    },
    #[error("dimension `{name}` must be positive")]
    ZeroDimension { name: &'static str },
    #[error("mass input {index} at step {step} is negative or non-finite ({value})")]
    InvalidMass {
        step: usize,
        index: usize,
        value: f64,
    },
    #[error("input {index} at step {step} is not finite")]
    NonFiniteInput { step: usize, index: usize },
    #[error("cell state component {index} is negative or non-finite ({value})")]
    InvalidState { index: usize, value: f64 },
    #[error("expected {expected} values for `{what}`, got {found}")]
    Length {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("a sequence needs at least one step")]
    EmptySequence,
    #[error("state does not match a {0} model")]
    StateKind(ModelKind),
    #[error("{0} has no closed-form weight count")]
    NoClosedForm(ModelKind),
    #[error("unknown model kind `{0}` (expected lstm, mclstm or fslstm)")]
    UnknownModel(String),
}

pub(crate) fn positive(name: &'static str, v: usize) -> Result<(), CellsError> {
    if v == 0 {
        Err(CellsError::ZeroDimension { name })
    } else {
        Ok(())
    }
}
