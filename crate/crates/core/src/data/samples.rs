use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use chrono::{Days, NaiveDate};

use super::{DataError, GaugeRecord, NormalizationStats, Split, SplitSpec, AUX_WIDTH};
use crate::cells::{ModelKind, StepInput};

/// Input window length in days.
pub const WINDOW: usize = 365;

/// One training or evaluation target: the window ends on `day`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    /// Index of the target day in the gauge's calendar.
    pub day: usize,
    pub date: NaiveDate,
    /// Observed streamflow, mm/day.
    pub target: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SampleSets {
    pub train: Vec<Sample>,
    pub validation: Vec<Sample>,
    pub test: Vec<Sample>,
}

impl SampleSets {
    pub fn get(&self, split: Split) -> &[Sample] {
        match split {
            Split::Train => &self.train,
            Split::Validation => &self.validation,
            Split::Test => &self.test,
        }
    }

    fn get_mut(&mut self, split: Split) -> &mut Vec<Sample> {
        match split {
            Split::Train => &mut self.train,
            Split::Validation => &mut self.validation,
            Split::Test => &mut self.test,
        }
    }
}

/// Counts of target days per split by outcome.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SplitSkips {
    pub kept: usize,
    /// Window contains a day with a missing input.
    pub gap: usize,
    /// Window would start before the first day of record.
    pub short_history: usize,
    pub missing_target: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SkipReport {
    pub gauge_id: String,
    pub train: SplitSkips,
    pub validation: SplitSkips,
    pub test: SplitSkips,
}

impl SkipReport {
    pub fn get(&self, split: Split) -> &SplitSkips {
        match split {
            Split::Train => &self.train,
            Split::Validation => &self.validation,
            Split::Test => &self.test,
        }
    }

    fn get_mut(&mut self, split: Split) -> &mut SplitSkips {
        match split {
            Split::Train => &mut self.train,
            Split::Validation => &mut self.validation,
            Split::Test => &mut self.test,
        }
    }

    pub fn lacks_validation(&self) -> bool {
        self.validation.kept == 0
    }

    pub fn dropped(&self) -> usize {
        Split::ALL
            .iter()
            .map(|&s| {
                let k = self.get(s);
                k.gap + k.short_history + k.missing_target
            })
            .sum()
    }
}

impl core::fmt::Display for SkipReport {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}", self.gauge_id)?;
        for split in Split::ALL {
            let k = self.get(split);
            write!(
                f,
                " {split}: kept={} gap={} short_history={} missing_target={};",
                k.kept, k.gap, k.short_history, k.missing_target
            )?;
        }
        if self.lacks_validation() {
            write!(f, " no validation coverage")?;
        }
        Ok(())
    }
}

/// A gauge converted to model inputs, with its samples.
#[derive(Clone, Debug, PartialEq)]
pub struct PreparedGauge {
    gauge_id: String,
    start: NaiveDate,
    /// Physical `(w, p)` per day, zero on gap days.
    mass: Vec<[f64; 2]>,
    /// Scaled `(w, p, t_min, t_mean, t_max)` per day, zero on gap days.
    scaled: Vec<[f64; 5]>,
    statics: Vec<f64>,
    target: Vec<Option<f64>>,
    window: usize,
    pub samples: SampleSets,
    pub skips: SkipReport,
}

/// Scales `record` with `stats` and windows it into samples by the split
/// of each target date. Windows reach back across split boundaries.
pub fn build_samples(
    record: &GaugeRecord,
    splits: &SplitSpec,
    stats: &NormalizationStats,
    window: usize,
) -> Result<PreparedGauge, DataError> {
    if window == 0 {
        return Err(DataError::ZeroWindow);
    }
    stats.validate()?;
    let rows = record.rows();
    let n = rows.len();
    let mut mass = Vec::with_capacity(n);
    let mut scaled = Vec::with_capacity(n);
    let mut gaps = vec![0u32; n + 1];
    let order = [1, 0, 2, 3, 4];
    for (i, row) in rows.iter().enumerate() {
        let d = row.dynamics();
        let complete = row.inputs_complete();
        gaps[i + 1] = gaps[i] + u32::from(!complete);
        if complete {
            let v = d.map(|x| x.expect("complete row"));
            mass.push([v[1], v[0]]);
            scaled.push(order.map(|k| stats.dynamic[k].scale(v[k])));
        } else {
            mass.push([0.0; 2]);
            scaled.push([0.0; 5]);
        }
    }
    let statics = record
        .attributes()
        .iter()
        .zip(&stats.statics)
        .map(|(&x, s)| s.scale(x))
        .collect();
    let target: Vec<Option<f64>> = rows.iter().map(|r| r.streamflow).collect();

    let mut samples = SampleSets::default();
    let mut skips = SkipReport {
        gauge_id: record.gauge_id().into(),
        train: SplitSkips::default(),
        validation: SplitSkips::default(),
        test: SplitSkips::default(),
    };
    for (day, row) in rows.iter().enumerate() {
        let Some(split) = splits.split_of(row.date) else {
            continue;
        };
        let counts = skips.get_mut(split);
        let Some(y) = target[day] else {
            counts.missing_target += 1;
            continue;
        };
        if day + 1 < window {
            counts.short_history += 1;
            continue;
        }
        if gaps[day + 1] != gaps[day + 1 - window] {
            counts.gap += 1;
            continue;
        }
        counts.kept += 1;
        samples.get_mut(split).push(Sample {
            day,
            date: row.date,
            target: y,
        });
    }
    Ok(PreparedGauge {
        gauge_id: record.gauge_id().into(),
        start: record.start(),
        mass,
        scaled,
        statics,
        target,
        window,
        samples,
        skips,
    })
}

impl PreparedGauge {
    pub fn gauge_id(&self) -> &str {
        &self.gauge_id
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn date(&self, day: usize) -> NaiveDate {
        self.start + Days::new(day as u64)
    }

    pub fn observed(&self, day: usize) -> Option<f64> {
        self.target[day]
    }

    /// Physical `(w, p)` on `day`.
    pub fn mass(&self, day: usize) -> [f64; 2] {
        self.mass[day]
    }

    /// Scaled statics in attribute order.
    pub fn statics(&self) -> &[f64] {
        &self.statics
    }
}

/// Reusable per-step input buffers for one window.
///
/// Mass-conserving models receive physical `(w, p)` as mass; the LSTM
/// receives scaled `(w, p)`. Every model receives the scaled temperatures
/// followed by the scaled statics as auxiliary inputs.
#[derive(Clone, Debug, Default)]
pub struct WindowInputs {
    mass: Vec<f64>,
    aux: Vec<f64>,
    steps: usize,
}

impl WindowInputs {
    pub const MASS_WIDTH: usize = 2;

    pub fn new() -> Self {
        Self::default()
    }

    /// Loads the `steps` days ending on `day`.
    pub fn fill(&mut self, gauge: &PreparedGauge, kind: ModelKind, day: usize, steps: usize) {
        assert!(
            steps >= 1 && day + 1 >= steps && day < gauge.len(),
            "window of {steps} days ending on day {day} does not fit a {}-day record",
            gauge.len()
        );
        self.steps = steps;
        self.mass.clear();
        self.aux.clear();
        for t in day + 1 - steps..=day {
            let s = &gauge.scaled[t];
            if kind.is_mass_conserving() {
                self.mass.extend_from_slice(&gauge.mass[t]);
            } else {
                self.mass.extend_from_slice(&s[..2]);
            }
            self.aux.extend_from_slice(&s[2..]);
            self.aux.extend_from_slice(&gauge.statics);
        }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn step_inputs(&self) -> Vec<StepInput<'_>> {
        self.mass
            .chunks_exact(Self::MASS_WIDTH)
            .zip(self.aux.chunks_exact(AUX_WIDTH))
            .map(|(mass, aux)| StepInput { mass, aux })
            .collect()
    }
}
