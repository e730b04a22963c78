use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{DataError, GaugeRecord, SplitSpec, DYNAMIC_FEATURES, STATIC_ATTRIBUTES};
use crate::math;

/// Smallest standard deviation used for scaling.
pub const STD_FLOOR: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub mean: f64,
    /// Population standard deviation, at least [`STD_FLOOR`].
    pub std: f64,
}

impl FeatureStats {
    /// Mean and floored population standard deviation of `values`, or
    /// `None` when empty. A constant column gets its value as the mean
    /// exactly, so it scales to 0.
    pub fn fit(values: impl Iterator<Item = f64> + Clone) -> Option<Self> {
        let mut n = 0usize;
        let mut sum = 0.0;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.clone() {
            n += 1;
            sum += v;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if n == 0 {
            return None;
        }
        if lo == hi {
            return Some(Self {
                mean: lo,
                std: STD_FLOOR,
            });
        }
        let mean = sum / n as f64;
        let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
        Some(Self {
            mean,
            std: math::sqrt(ss / n as f64).max(STD_FLOOR),
        })
    }

    pub fn scale(&self, x: f64) -> f64 {
        (x - self.mean) / self.std
    }

    pub fn unscale(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

fn finite(feature: &'static str, s: FeatureStats) -> Result<FeatureStats, DataError> {
    if s.mean.is_finite() && s.std.is_finite() {
        Ok(s)
    } else {
        Err(DataError::NonFiniteStatistic { feature })
    }
}

/// Scaling statistics fitted on training-period rows only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    /// In [`DYNAMIC_FEATURES`] order.
    pub dynamic: Vec<FeatureStats>,
    /// In [`STATIC_ATTRIBUTES`] order, across gauges.
    pub statics: Vec<FeatureStats>,
    /// Streamflow pooled over every gauge.
    pub target: FeatureStats,
    /// Streamflow per gauge; absent for gauges without training targets.
    pub target_by_gauge: BTreeMap<String, FeatureStats>,
}

impl NormalizationStats {
    /// Gauges are visited in id order, so the result does not depend on
    /// the order of `records`.
    pub fn fit(records: &[GaugeRecord], splits: &SplitSpec) -> Result<Self, DataError> {
        if records.is_empty() {
            return Err(DataError::NoGauges);
        }
        let mut sorted: Vec<&GaugeRecord> = records.iter().collect();
        sorted.sort_by(|a, b| a.gauge_id().cmp(b.gauge_id()));
        let records = sorted;
        let train = splits.train;
        let rows = || {
            records
                .iter()
                .flat_map(|r| r.rows().iter())
                .filter(move |row| train.contains(row.date))
        };
        let mut dynamic = Vec::with_capacity(DYNAMIC_FEATURES.len());
        for (k, feature) in DYNAMIC_FEATURES.iter().enumerate() {
            let stats = FeatureStats::fit(rows().filter_map(move |row| row.dynamics()[k]))
                .ok_or(DataError::NoTrainingData { feature })?;
            dynamic.push(finite(feature, stats)?);
        }
        let statics = (0..STATIC_ATTRIBUTES.len())
            .map(|k| {
                let s = FeatureStats::fit(records.iter().map(move |r| r.attributes()[k]))
                    .expect("records is non-empty");
                finite(STATIC_ATTRIBUTES[k], s)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let target = FeatureStats::fit(rows().filter_map(|row| row.streamflow)).ok_or(
            DataError::NoTrainingData {
                feature: "streamflow_mm",
            },
        )?;
        let target = finite("streamflow_mm", target)?;
        let mut target_by_gauge = BTreeMap::new();
        for r in &records {
            let flows = r
                .rows()
                .iter()
                .filter(move |row| train.contains(row.date))
                .filter_map(|row| row.streamflow);
            if let Some(s) = FeatureStats::fit(flows) {
                target_by_gauge.insert(r.gauge_id().into(), finite("streamflow_mm", s)?);
            }
        }
        Ok(Self {
            dynamic,
            statics,
            target,
            target_by_gauge,
        })
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.dynamic.len() != DYNAMIC_FEATURES.len()
            || self.statics.len() != STATIC_ATTRIBUTES.len()
        {
            return Err(DataError::MalformedStats {
                dynamic: self.dynamic.len(),
                statics: self.statics.len(),
            });
        }
        Ok(())
    }

    pub fn precip(&self) -> FeatureStats {
        self.dynamic[0]
    }

    pub fn soil_moisture(&self) -> FeatureStats {
        self.dynamic[1]
    }

    /// Streamflow statistics of `gauge`, falling back to the pooled ones.
    pub fn target_for(&self, gauge: &str) -> FeatureStats {
        self.target_by_gauge
            .get(gauge)
            .copied()
            .unwrap_or(self.target)
    }

    /// Shift and scale for standardising the physical `(w, p)` pair fed
    /// to the fast/slow perceptron.
    pub fn mass_scaling(&self) -> ([f64; 2], [f64; 2]) {
        let (w, p) = (self.soil_moisture(), self.precip());
        ([w.mean, p.mean], [1.0 / w.std, 1.0 / p.std])
    }
}
