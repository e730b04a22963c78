use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    adam_step, AdamHyper, AdamState, Dataset, SampleRef, Scratch, TrainConfig, TrainError,
};
use crate::cells::{names, CellsError, Layout, Model, SequenceGraph, SequenceOptions};
use crate::data::{NormalizationStats, PreparedGauge, Sample, Split};
use crate::numerics::{Gradients, ParamSet, Tensor};

/// Samples per gradient partial sum. Partial sums are added in order, so
/// results do not depend on how chunks are scheduled.
pub const GRAD_CHUNK: usize = 16;

/// Loss and prediction graphs for one layout and window length.
#[derive(Debug)]
pub struct Engine {
    fit: SequenceGraph,
    infer: SequenceGraph,
}

impl Engine {
    pub fn new(layout: &Layout, window: usize) -> Result<Self, TrainError> {
        Ok(Self {
            fit: SequenceGraph::build(layout, window, SequenceOptions::training())?,
            infer: SequenceGraph::build(layout, window, SequenceOptions::default())?,
        })
    }

    pub fn layout(&self) -> &Layout {
        self.fit.layout()
    }

    pub fn window(&self) -> usize {
        self.fit.steps()
    }

    /// Squared scaled error of the window ending on `sample` and its
    /// gradient.
    pub fn loss_and_gradients(
        &self,
        params: &ParamSet,
        gauge: &PreparedGauge,
        sample: &Sample,
        scale: f64,
        scratch: &mut Scratch,
    ) -> Result<(f64, Gradients), TrainError> {
        let layout = self.layout();
        scratch
            .inputs
            .fill(gauge, layout.kind(), sample.day, self.window());
        let wrap = |source: CellsError| TrainError::Sample {
            gauge: gauge.gauge_id().into(),
            date: sample.date,
            source,
        };
        let mut b = self
            .fit
            .bindings(&layout.initial_state(), &scratch.inputs.step_inputs())
            .map_err(wrap)?;
        b.insert(names::TARGET.into(), Tensor::scalar(sample.target));
        b.insert(names::LOSS_SCALE.into(), Tensor::scalar(scale));
        let mut eval = self
            .fit
            .evaluate(params, &b, core::mem::take(&mut scratch.ws))
            .map_err(wrap)?;
        let loss = eval.output(names::LOSS)?[0];
        let grads = eval.backward(names::LOSS)?;
        scratch.ws = eval.into_workspace();
        Ok((loss, grads))
    }

    /// Streamflow on the last day of the window ending on `day`.
    pub fn predict(
        &self,
        params: &ParamSet,
        gauge: &PreparedGauge,
        day: usize,
        scratch: &mut Scratch,
    ) -> Result<f64, TrainError> {
        let layout = self.layout();
        scratch
            .inputs
            .fill(gauge, layout.kind(), day, self.window());
        let wrap = |source: CellsError| TrainError::Sample {
            gauge: gauge.gauge_id().into(),
            date: gauge.date(day),
            source,
        };
        let b = self
            .infer
            .bindings(&layout.initial_state(), &scratch.inputs.step_inputs())
            .map_err(wrap)?;
        let eval = self
            .infer
            .infer(params, &b, core::mem::take(&mut scratch.ws))
            .map_err(wrap)?;
        let q = self.infer.final_q(&eval).map_err(wrap)?;
        scratch.ws = eval.into_workspace();
        Ok(q)
    }
}

#[cfg(feature = "parallel")]
pub(crate) fn map_chunks<T, R, F>(items: &[T], size: usize, f: F) -> Result<Vec<R>, TrainError>
where
    T: Sync,
    R: Send,
    F: Fn(&[T]) -> Result<R, TrainError> + Sync + Send,
{
    use rayon::prelude::*;
    items.par_chunks(size).map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_chunks<T, R, F>(items: &[T], size: usize, f: F) -> Result<Vec<R>, TrainError>
where
    F: Fn(&[T]) -> Result<R, TrainError>,
{
    items.chunks(size).map(f).collect()
}

/// Sum of per-sample losses and of their gradients over `refs`.
pub fn batch_gradients(
    engine: &Engine,
    params: &ParamSet,
    data: &Dataset,
    split: Split,
    refs: &[SampleRef],
    config: &TrainConfig,
) -> Result<(f64, Gradients), TrainError> {
    let partials = map_chunks(refs, GRAD_CHUNK, |chunk| {
        let mut scratch = Scratch::default();
        let mut loss = 0.0;
        let mut grads = Gradients::new();
        for &r in chunk {
            let (gauge, sample) = data.sample(split, r);
            let scale = data.loss_scale(config.loss, r.gauge);
            let (l, g) = engine.loss_and_gradients(params, gauge, sample, scale, &mut scratch)?;
            loss += l;
            grads.accumulate(&g)?;
        }
        Ok((loss, grads))
    })?;
    let mut loss = 0.0;
    let mut grads = Gradients::new();
    for (l, g) in partials {
        loss += l;
        grads.accumulate(&g)?;
    }
    Ok((loss, grads))
}

/// Mean scaled squared error over `refs`, or `None` if empty.
fn mean_loss(
    engine: &Engine,
    params: &ParamSet,
    data: &Dataset,
    split: Split,
    refs: &[SampleRef],
    config: &TrainConfig,
) -> Result<Option<f64>, TrainError> {
    if refs.is_empty() {
        return Ok(None);
    }
    let partials = map_chunks(refs, GRAD_CHUNK, |chunk| {
        let mut scratch = Scratch::default();
        let mut sum = 0.0;
        for &r in chunk {
            let (gauge, sample) = data.sample(split, r);
            let q = engine.predict(params, gauge, sample.day, &mut scratch)?;
            let e = (q - sample.target) * data.loss_scale(config.loss, r.gauge);
            sum += e * e;
        }
        Ok(sum)
    })?;
    Ok(Some(partials.iter().sum::<f64>() / refs.len() as f64))
}

/// Losses after one epoch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean per-sample training loss over the epoch's batches.
    pub train_loss: f64,
    pub valid_loss: Option<f64>,
}

/// Weights with everything needed to rebuild and apply them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub layout: Layout,
    pub config: TrainConfig,
    pub stats: NormalizationStats,
    pub params: ParamSet,
    /// Epoch the weights were taken after (1-based).
    pub epoch: usize,
    pub validation_loss: Option<f64>,
    pub history: Vec<EpochLog>,
}

impl Checkpoint {
    pub fn model(&self) -> Result<Model, TrainError> {
        Ok(Model::from_params(self.layout, self.params.clone())?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub checkpoint: Checkpoint,
    /// Mean loss of the first batch, before any update.
    pub initial_loss: f64,
    /// Training loss of the last epoch.
    pub final_train_loss: f64,
    /// Notes such as accepted overrides or a missing validation set.
    pub warnings: Vec<alloc::string::String>,
}

/// Seeded initial weights; FS-LSTM also gets the perceptron input scaling
/// from `stats`.
pub fn initial_model(
    config: &TrainConfig,
    stats: &NormalizationStats,
) -> Result<Model, TrainError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = Model::init(config.layout(), &mut rng)?;
    if let Model::FsLstm(p) = &mut model {
        let (shift, scale) = stats.mass_scaling();
        p.set_input_scaling(shift, scale);
    }
    Ok(model)
}

pub fn train(data: &Dataset, config: &TrainConfig) -> Result<TrainReport, TrainError> {
    train_with(data, config, &mut |_| {})
}

/// Trains on the training pool and keeps the weights with the lowest
/// validation loss; `observer` sees every epoch.
pub fn train_with(
    data: &Dataset,
    config: &TrainConfig,
    observer: &mut dyn FnMut(&EpochLog),
) -> Result<TrainReport, TrainError> {
    let mut warnings = config.validate()?;
    let train_pool = data.pool(Split::Train);
    if train_pool.is_empty() {
        return Err(TrainError::NoTrainingSamples);
    }
    let valid_pool = data.pool(Split::Validation);
    if valid_pool.is_empty() {
        warnings.push("no validation samples; keeping the final epoch".into());
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    let layout = config.layout();
    let engine = Engine::new(&layout, config.window)?;
    let mut params = initial_model(config, data.stats())?.params().clone();
    let hyper = AdamHyper::new(config.learning_rate);
    let mut adam = AdamState::new();
    let mut shuffle = ChaCha8Rng::seed_from_u64(config.seed);
    shuffle.set_stream(1);

    let mut order = train_pool;
    let mut history = Vec::with_capacity(config.epochs);
    let mut best: Option<(usize, Option<f64>, ParamSet)> = None;
    let mut initial_loss = None;
    for epoch in 1..=config.epochs {
        order.shuffle(&mut shuffle);
        let mut epoch_loss = 0.0;
        for (batch, refs) in order.chunks(config.batch).enumerate() {
            let non_finite = |detail: String| TrainError::NonFiniteLoss {
                epoch,
                batch,
                detail,
            };
            let (loss_sum, mut grads) =
                batch_gradients(&engine, &params, data, Split::Train, refs, config).map_err(
                    |e| {
                        if e.is_non_finite() {
                            non_finite(e.to_string())
                        } else {
                            e
                        }
                    },
                )?;
            let n = refs.len() as f64;
            if !loss_sum.is_finite() {
                return Err(non_finite("batch loss overflowed".into()));
            }
            initial_loss.get_or_insert(loss_sum / n);
            epoch_loss += loss_sum;
            grads.scale(1.0 / n);
            let norm = grads.global_norm();
            if !norm.is_finite() {
                return Err(TrainError::NonFiniteGradient { epoch, batch });
            }
            if norm > config.clip_norm {
                grads.scale(config.clip_norm / norm);
            }
            adam_step(&mut params, &grads, &mut adam, &hyper)?;
        }
        let valid_loss = mean_loss(
            &engine,
            &params,
            data,
            Split::Validation,
            &valid_pool,
            config,
        )?;
        let log = EpochLog {
            epoch,
            train_loss: epoch_loss / order.len() as f64,
            valid_loss,
        };
        observer(&log);
        history.push(log);
        let improved = match (&best, valid_loss) {
            (None, _) => true,
            (Some((_, Some(b), _)), Some(v)) => v < *b,
            (Some(_), None) => true,
            (Some((_, None, _)), Some(_)) => true,
        };
        if improved {
            best = Some((epoch, valid_loss, params.clone()));
        }
    }
    let (epoch, validation_loss, params) = best.expect("at least one epoch");
    let final_train_loss = history.last().expect("at least one epoch").train_loss;
    Ok(TrainReport {
        checkpoint: Checkpoint {
            layout,
            config: config.clone(),
            stats: data.stats().clone(),
            params,
            epoch,
            validation_loss,
            history,
        },
        initial_loss: initial_loss.expect("at least one batch"),
        final_train_loss,
        warnings,
    })
}
