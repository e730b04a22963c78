use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{mean, Metric, MetricsError, ScoreReport};
use crate::math;

/// Bias scores within ±25 % are counted as acceptable.
pub const BIAS_TOLERANCE_PCT: f64 = 25.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: Metric,
    /// Over defined scores; `None` when no gauge has one.
    pub mean: Option<f64>,
    /// Population standard deviation over defined scores.
    pub sd: Option<f64>,
    pub defined: usize,
    pub undefined: usize,
    /// Share of defined bias scores with `|bias| ≤ 25 %`.
    pub within_tolerance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub metrics: Vec<MetricSummary>,
    pub reports: Vec<ScoreReport>,
}

pub fn summarize(reports: &[ScoreReport]) -> Result<Summary, MetricsError> {
    if reports.is_empty() {
        return Err(MetricsError::NoReports);
    }
    let metrics = Metric::ALL
        .into_iter()
        .map(|metric| {
            let values: Vec<f64> = reports.iter().filter_map(|r| r.get(metric)).collect();
            let (m, sd) = if values.is_empty() {
                (None, None)
            } else {
                let m = mean(&values);
                let var =
                    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64;
                (Some(m), Some(math::sqrt(var)))
            };
            let within_tolerance = (metric.is_bias() && !values.is_empty()).then(|| {
                values
                    .iter()
                    .filter(|v| v.abs() <= BIAS_TOLERANCE_PCT)
                    .count() as f64
                    / values.len() as f64
            });
            MetricSummary {
                metric,
                mean: m,
                sd,
                defined: values.len(),
                undefined: reports.len() - values.len(),
                within_tolerance,
            }
        })
        .collect();
    Ok(Summary {
        metrics,
        reports: reports.to_vec(),
    })
}
