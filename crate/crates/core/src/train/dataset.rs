use alloc::vec::Vec;

use super::{LossKind, TrainError};
use crate::data::{
    build_samples, GaugeRecord, NormalizationStats, PreparedGauge, Sample, Split, SplitSpec,
};

/// Index of one sample in a [`Dataset`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct SampleRef {
    pub gauge: usize,
    pub index: usize,
}

/// Prepared gauges in gauge-id order, with the statistics used to scale
/// them.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    gauges: Vec<PreparedGauge>,
    stats: NormalizationStats,
    split: SplitSpec,
}

impl Dataset {
    /// Fits statistics on the training period of `records` and windows
    /// every gauge.
    pub fn prepare(
        records: &[GaugeRecord],
        split: &SplitSpec,
        window: usize,
    ) -> Result<Self, TrainError> {
        split.validate()?;
        let stats = NormalizationStats::fit(records, split)?;
        Self::with_stats(records, split, stats, window)
    }

    /// Windows every gauge with previously fitted statistics.
    pub fn with_stats(
        records: &[GaugeRecord],
        split: &SplitSpec,
        stats: NormalizationStats,
        window: usize,
    ) -> Result<Self, TrainError> {
        let mut gauges = records
            .iter()
            .map(|r| build_samples(r, split, &stats, window))
            .collect::<Result<Vec<_>, _>>()?;
        gauges.sort_by(|a, b| a.gauge_id().cmp(b.gauge_id()));
        Ok(Self {
            gauges,
            stats,
            split: *split,
        })
    }

    pub fn gauges(&self) -> &[PreparedGauge] {
        &self.gauges
    }

    pub fn stats(&self) -> &NormalizationStats {
        &self.stats
    }

    pub fn split(&self) -> &SplitSpec {
        &self.split
    }

    /// Every sample of `split` in canonical order: gauges by id, then
    /// target day.
    pub fn pool(&self, split: Split) -> Vec<SampleRef> {
        self.gauges
            .iter()
            .enumerate()
            .flat_map(|(g, p)| {
                (0..p.samples.get(split).len()).map(move |index| SampleRef { gauge: g, index })
            })
            .collect()
    }

    pub fn sample(&self, split: Split, r: SampleRef) -> (&PreparedGauge, &Sample) {
        let g = &self.gauges[r.gauge];
        (g, &g.samples.get(split)[r.index])
    }

    /// Loss factor for samples of gauge `g`.
    pub fn loss_scale(&self, loss: LossKind, g: usize) -> f64 {
        let gauge = self.stats.target_for(self.gauges[g].gauge_id()).std;
        loss.scale(gauge, self.stats.target.std)
    }
}
