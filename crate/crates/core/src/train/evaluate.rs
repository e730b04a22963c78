use alloc::string::String;
use alloc::vec::Vec;

use chrono::NaiveDate;

use super::trainer::map_chunks;
use super::{Checkpoint, Engine, TrainError};
use crate::data::{PreparedGauge, Sample, Split, SplitSkips, WindowInputs};
use crate::numerics::{ParamSet, Workspace};

/// Reusable buffers for one worker.
#[derive(Debug, Default)]
pub struct Scratch {
    pub inputs: WindowInputs,
    pub ws: Workspace,
}

/// Anything that maps a sample's window to a streamflow prediction.
pub trait Predictor: Sync {
    fn predict(
        &self,
        scratch: &mut Scratch,
        gauge: &PreparedGauge,
        sample: &Sample,
    ) -> Result<f64, TrainError>;
}

/// A trained model.
#[derive(Debug)]
pub struct ModelPredictor {
    engine: Engine,
    params: ParamSet,
}

impl ModelPredictor {
    pub fn new(checkpoint: &Checkpoint) -> Result<Self, TrainError> {
        let model = checkpoint.model()?;
        Ok(Self {
            engine: Engine::new(&checkpoint.layout, checkpoint.config.window)?,
            params: model.params().clone(),
        })
    }
}

impl Predictor for ModelPredictor {
    fn predict(
        &self,
        scratch: &mut Scratch,
        gauge: &PreparedGauge,
        sample: &Sample,
    ) -> Result<f64, TrainError> {
        self.engine
            .predict(&self.params, gauge, sample.day, scratch)
    }
}

/// Observed and predicted streamflow of one gauge, mm/day.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugePredictions {
    pub gauge_id: String,
    pub dates: Vec<NaiveDate>,
    pub observed: Vec<f64>,
    pub predicted: Vec<f64>,
    /// Why target days of the split were not predicted.
    pub skips: SplitSkips,
}

impl GaugePredictions {
    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }
}

const PREDICT_CHUNK: usize = 32;

/// Predicts every sample of `split` for each gauge. Gauges without valid
/// windows yield empty series.
pub fn evaluate<P: Predictor>(
    predictor: &P,
    gauges: &[PreparedGauge],
    split: Split,
) -> Result<Vec<GaugePredictions>, TrainError> {
    gauges
        .iter()
        .map(|g| {
            let samples = g.samples.get(split);
            let chunks = map_chunks(samples, PREDICT_CHUNK, |chunk| {
                let mut scratch = Scratch::default();
                chunk
                    .iter()
                    .map(|s| predictor.predict(&mut scratch, g, s))
                    .collect::<Result<Vec<f64>, TrainError>>()
            })?;
            Ok(GaugePredictions {
                gauge_id: g.gauge_id().into(),
                dates: samples.iter().map(|s| s.date).collect(),
                observed: samples.iter().map(|s| s.target).collect(),
                predicted: chunks.into_iter().flatten().collect(),
                skips: *g.skips.get(split),
            })
        })
        .collect()
}
