//! Mass-conserving recurrent networks for daily rainfall-runoff modelling.
//!
//! The crate is `no_std` + `alloc` when built without the default `std`
//! feature. File formats and the command-line driver live in the `fslstm`
//! companion crate.
//!
//! - [`numerics`]: tensors and the reverse-mode engine.
//! - [`cells`]: MC-LSTM, FS-LSTM, the fast/slow perceptron, a vanilla LSTM
//!   baseline and sequence runners with a mass ledger.
//! - [`data`]: gauge records, selection, normalisation, windowing and the
//!   synthetic fast/slow catchment.
//! - [`train`]: Adam, the pooled mini-batch trainer and evaluation.
//! - [`metrics`]: NSE, KGE, RMSE, flow-duration curves and FDC biases.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

mod math;

pub mod cells;
pub mod data;
pub mod metrics;
pub mod numerics;
pub mod train;
