use std::path::Path;

use fslstm_core::data::DataError;
use fslstm_core::metrics::MetricsError;
use fslstm_core::train::TrainError;

/// Failure of a command, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration or arguments; exit code 1.
    #[error("configuration error: {0}")]
    Config(String),
    /// Missing, unreadable or invalid input data; exit code 2.
    #[error("data error: {0}")]
    Data(String),
    /// Overflow or NaN during training or evaluation; exit code 3.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub const CONFIG: i32 = 1;
    pub const DATA: i32 = 2;
    pub const NUMERICAL: i32 = 3;

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => Self::CONFIG,
            CliError::Data(_) => Self::DATA,
            CliError::Numerical(_) => Self::NUMERICAL,
        }
    }

    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Data(format!("{}: {e}", path.display()))
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::InvertedRange { .. } | DataError::OverlappingSplits { .. } => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        if e.is_non_finite() {
            return CliError::Numerical(e.to_string());
        }
        match e {
            TrainError::Config(_) | TrainError::ProjectionBound { .. } => {
                CliError::Config(e.to_string())
            }
            TrainError::Data(d) => d.into(),
            TrainError::NoTrainingSamples | TrainError::Checkpoint(_) => {
                CliError::Data(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Data(e.to_string())
    }
}
