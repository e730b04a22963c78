//! Adam, the pooled mini-batch trainer, checkpoints and evaluation.
//!
//! Training is deterministic for a given seed. Samples are pooled in a
//! canonical order (gauges by id, then target day), shuffled with a seeded
//! stream, and per-sample gradients are summed in fixed-size chunks in
//! order, so the result does not depend on the number of threads.

mod adam;
mod config;
mod dataset;
mod evaluate;
mod trainer;

use alloc::string::String;

use crate::cells::CellsError;
use crate::data::DataError;
use crate::numerics::NumericsError;

impl TrainError {
    /// True for overflow or NaN inside a forward or backward pass.
    pub fn is_non_finite(&self) -> bool {
        let numerics = match self {
            TrainError::Numerics(e) => Some(e),
            TrainError::Cells(c) | TrainError::Sample { source: c, .. } => match c {
                CellsError::Numerics(e) | CellsError::AtStep { source: e, .. } => Some(e),
                _ => None,
            },
            _ => None,
        };
        matches!(numerics, Some(NumericsError::NonFinite { .. }))
    }
}

pub use adam::{adam_step, AdamHyper, AdamState};
pub use config::{LossKind, TrainConfig};
pub use dataset::{Dataset, SampleRef};
pub use evaluate::{evaluate, GaugePredictions, ModelPredictor, Predictor, Scratch};
pub use trainer::{
    batch_gradients, initial_model, train, train_with, Checkpoint, Engine, EpochLog, TrainReport,
    GRAD_CHUNK,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error(transparent)]
    Cells(#[from] CellsError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error(
        "projection width {proj} exceeds the largest width ({bound}) that keeps FS-LSTM \
         smaller than MC-LSTM at {cells} cells and {aux} auxiliary inputs"
    )]
    ProjectionBound {
        proj: usize,
        bound: usize,
        cells: usize,
        aux: usize,
    },
    #[error("no training samples")]
    NoTrainingSamples,
    #[error("non-finite training loss at epoch {epoch}, batch {batch}: {detail}")]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        detail: String,
    },
    #[error("non-finite gradient at epoch {epoch}, batch {batch}")]
    NonFiniteGradient { epoch: usize, batch: usize },
    #[error("non-finite gradient for `{0}`")]
    NonFiniteUpdate(String),
    #[error("gradient for `{0}` has no matching parameter")]
    UnknownGradient(String),
    #[error("gauge {gauge}: sample ending {date}: {source}")]
    Sample {
        gauge: String,
        date: chrono::NaiveDate,
        #[source]
        source: CellsError,
    },
    #[error("checkpoint does not match its layout: {0}")]
    Checkpoint(String),
}
