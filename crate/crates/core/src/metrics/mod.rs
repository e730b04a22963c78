//! Skill scores for daily streamflow, flow-duration curves and
//! multi-gauge summaries. All flows are in mm/day.

mod fdc;
mod scores;
mod summary;

use alloc::vec::Vec;

pub use fdc::{bias_fhv, bias_flv, bias_fms, fdc, Fdc, LOG_FLOOR, SEGMENTS};
pub use scores::{kge, nse, rmse, score_report, Metric, ScoreReport};
pub use summary::{summarize, MetricSummary, Summary, BIAS_TOLERANCE_PCT};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("observed and simulated series differ in length ({observed} vs {simulated})")]
    LengthMismatch { observed: usize, simulated: usize },
    #[error("at least 2 paired values are required, got {0}")]
    TooShort(usize),
    #[error("{metric} is undefined: {reason}")]
    Undefined {
        metric: Metric,
        reason: &'static str,
    },
    #[error("no score reports to summarise")]
    NoReports,
}

/// Observed and simulated values aligned by day. Pairs with a non-finite
/// value on either side are dropped.
#[derive(Clone, Debug, PartialEq)]
pub struct PairedSeries {
    observed: Vec<f64>,
    simulated: Vec<f64>,
}

impl PairedSeries {
    pub fn new(observed: &[f64], simulated: &[f64]) -> Result<Self, MetricsError> {
        if observed.len() != simulated.len() {
            return Err(MetricsError::LengthMismatch {
                observed: observed.len(),
                simulated: simulated.len(),
            });
        }
        let (observed, simulated): (Vec<f64>, Vec<f64>) = observed
            .iter()
            .zip(simulated)
            .filter(|(o, s)| o.is_finite() && s.is_finite())
            .map(|(&o, &s)| (o, s))
            .unzip();
        if observed.len() < 2 {
            return Err(MetricsError::TooShort(observed.len()));
        }
        Ok(Self {
            observed,
            simulated,
        })
    }

    /// Pairs days where both values are present.
    pub fn from_options(
        observed: &[Option<f64>],
        simulated: &[Option<f64>],
    ) -> Result<Self, MetricsError> {
        let o: Vec<f64> = observed.iter().map(|v| v.unwrap_or(f64::NAN)).collect();
        let s: Vec<f64> = simulated.iter().map(|v| v.unwrap_or(f64::NAN)).collect();
        Self::new(&o, &s)
    }

    pub fn observed(&self) -> &[f64] {
        &self.observed
    }

    pub fn simulated(&self) -> &[f64] {
        &self.simulated
    }

    pub fn len(&self) -> usize {
        self.observed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed.is_empty()
    }
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}
