use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::cells::{max_projection_dim, FsLstmDims, Layout, LstmDims, McLstmDims, ModelKind};
use crate::data::{WindowInputs, AUX_WIDTH};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Squared error scaled by the gauge's training-period streamflow
    /// standard deviation.
    #[default]
    Mse,
    /// Squared error in pooled-standardised units divided by
    /// `(σ_gauge/σ_pooled + 0.1)²`.
    NseBasin,
}

impl LossKind {
    pub const NSE_EPS: f64 = 0.1;

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Mse => "mse",
            LossKind::NseBasin => "nse_basin",
        }
    }

    /// Factor applied to `q − y` before squaring.
    pub fn scale(self, gauge_std: f64, pooled_std: f64) -> f64 {
        match self {
            LossKind::Mse => 1.0 / gauge_std,
            LossKind::NseBasin => 1.0 / (gauge_std + Self::NSE_EPS * pooled_std),
        }
    }
}

impl core::str::FromStr for LossKind {
    type Err = TrainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mse" => Ok(LossKind::Mse),
            "nse_basin" => Ok(LossKind::NseBasin),
            other => Err(TrainError::Config(format!(
                "unknown loss `{other}` (expected mse or nse_basin)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub model: ModelKind,
    pub cells: usize,
    pub epochs: usize,
    pub batch: usize,
    pub window: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub loss: LossKind,
    /// FS-LSTM projection width `n_r`.
    pub proj: usize,
    pub fastslow_layers: usize,
    pub fastslow_width: usize,
    /// Global gradient-norm clipping threshold.
    pub clip_norm: f64,
    /// Accept a projection wider than the size-reduction bound.
    pub allow_wide_projection: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::FsLstm,
            cells: 64,
            epochs: 30,
            batch: 256,
            window: 365,
            learning_rate: 1e-3,
            seed: 0,
            loss: LossKind::Mse,
            proj: 10,
            fastslow_layers: 2,
            fastslow_width: 10,
            clip_norm: 1.0,
            allow_wide_projection: false,
        }
    }
}

impl TrainConfig {
    /// Checks the configuration and returns warnings for accepted
    /// overrides.
    pub fn validate(&self) -> Result<Vec<String>, TrainError> {
        let positive = [
            ("cells", self.cells),
            ("epochs", self.epochs),
            ("batch", self.batch),
            ("window", self.window),
            ("proj", self.proj),
            ("fastslow_width", self.fastslow_width),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(TrainError::Config(format!("{name} must be positive")));
            }
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(TrainError::Config(
                "learning_rate must be finite and nonnegative".into(),
            ));
        }
        if !(self.clip_norm.is_finite() && self.clip_norm > 0.0) {
            return Err(TrainError::Config(
                "clip_norm must be finite and positive".into(),
            ));
        }
        let mut warnings = Vec::new();
        if self.model == ModelKind::FsLstm {
            let bound = max_projection_dim(self.cells, AUX_WIDTH)?;
            if self.proj > bound {
                if !self.allow_wide_projection {
                    return Err(TrainError::ProjectionBound {
                        proj: self.proj,
                        bound,
                        cells: self.cells,
                        aux: AUX_WIDTH,
                    });
                }
                warnings.push(format!(
                    "projection width {} exceeds the size-reduction bound {bound}",
                    self.proj
                ));
            }
        }
        Ok(warnings)
    }

    pub fn layout(&self) -> Layout {
        let mass = WindowInputs::MASS_WIDTH;
        match self.model {
            ModelKind::Lstm => Layout::Lstm(LstmDims {
                mass,
                aux: AUX_WIDTH,
                hidden: self.cells,
            }),
            ModelKind::McLstm => Layout::McLstm(McLstmDims {
                cells: self.cells,
                aux: AUX_WIDTH,
                mass,
            }),
            ModelKind::FsLstm => Layout::FsLstm(FsLstmDims {
                cells: self.cells,
                aux: AUX_WIDTH,
                proj: self.proj,
                fastslow_layers: self.fastslow_layers,
                fastslow_width: self.fastslow_width,
            }),
        }
    }
}
