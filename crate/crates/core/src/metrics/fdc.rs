use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{Metric, MetricsError, PairedSeries};
use crate::math;

/// Flows are floored at this value (mm/day) before logarithms.
pub const LOG_FLOOR: f64 = 1e-6;

/// Exceedance-probability bounds of the high, mid and low segments.
pub const SEGMENTS: [(f64, f64); 3] = [(0.0, 0.2), (0.2, 0.7), (0.7, 1.0)];

/// Flow-duration curve: flows in descending order against Weibull
/// exceedance probabilities `i / (N + 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fdc {
    pub flows: Vec<f64>,
    pub probs: Vec<f64>,
}

pub fn fdc(flows: &[f64]) -> Result<Fdc, MetricsError> {
    if flows.len() < 2 {
        return Err(MetricsError::TooShort(flows.len()));
    }
    let mut sorted = flows.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let n1 = (sorted.len() + 1) as f64;
    let probs = (1..=sorted.len()).map(|i| i as f64 / n1).collect();
    Ok(Fdc {
        flows: sorted,
        probs,
    })
}

impl Fdc {
    pub fn len(&self) -> usize {
        self.flows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flows.is_empty()
    }

    /// Flow exceeded with probability `p`, linearly interpolated between
    /// plotting positions and held constant beyond the end points.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.flows.len();
        if p <= self.probs[0] {
            return self.flows[0];
        }
        if p >= self.probs[n - 1] {
            return self.flows[n - 1];
        }
        let x = p * (n + 1) as f64 - 1.0;
        let i = (x as usize).min(n - 2);
        let frac = (x - i as f64).clamp(0.0, 1.0);
        self.flows[i] + frac * (self.flows[i + 1] - self.flows[i])
    }

    /// Flows whose exceedance probability lies in `[lo, hi]`.
    pub fn segment(&self, lo: f64, hi: f64) -> &[f64] {
        let start = self.probs.partition_point(|&p| p < lo);
        let end = self.probs.partition_point(|&p| p <= hi);
        &self.flows[start..end]
    }
}

fn curves(s: &PairedSeries) -> (Fdc, Fdc) {
    (
        fdc(s.observed()).expect("paired series has at least 2 values"),
        fdc(s.simulated()).expect("paired series has at least 2 values"),
    )
}

fn ln_floored(q: f64) -> f64 {
    math::ln(q.max(LOG_FLOOR))
}

/// Percent bias of the high-flow volume, exceedance 0.0–0.2 of each
/// series' own curve.
pub fn bias_fhv(s: &PairedSeries) -> Result<f64, MetricsError> {
    let (o, q) = curves(s);
    let (lo, hi) = SEGMENTS[0];
    let (so, sq) = (o.segment(lo, hi), q.segment(lo, hi));
    if so.is_empty() {
        return Err(MetricsError::Undefined {
            metric: Metric::BiasFhv,
            reason: "high-flow segment is empty",
        });
    }
    let obs: f64 = so.iter().sum();
    if obs == 0.0 {
        return Err(MetricsError::Undefined {
            metric: Metric::BiasFhv,
            reason: "observed high-flow volume is zero",
        });
    }
    let diff: f64 = sq.iter().zip(so).map(|(y, x)| y - x).sum();
    Ok(100.0 * diff / obs)
}

/// Percent bias of the log-slope of the curve between exceedance 0.2 and
/// 0.7.
pub fn bias_fms(s: &PairedSeries) -> Result<f64, MetricsError> {
    let (o, q) = curves(s);
    let (lo, hi) = SEGMENTS[1];
    let slope = |c: &Fdc| ln_floored(c.quantile(lo)) - ln_floored(c.quantile(hi));
    let (so, sq) = (slope(&o), slope(&q));
    if so == 0.0 {
        return Err(MetricsError::Undefined {
            metric: Metric::BiasFms,
            reason: "observed mid-segment slope is zero",
        });
    }
    Ok(100.0 * (sq - so) / so)
}

/// Percent bias of the low-flow volume in log space, exceedance 0.7–1.0,
/// measured against each segment's minimum.
pub fn bias_flv(s: &PairedSeries) -> Result<f64, MetricsError> {
    let (o, q) = curves(s);
    let (lo, hi) = SEGMENTS[2];
    let (so, sq) = (o.segment(lo, hi), q.segment(lo, hi));
    if so.is_empty() {
        return Err(MetricsError::Undefined {
            metric: Metric::BiasFlv,
            reason: "low-flow segment is empty",
        });
    }
    let volume = |seg: &[f64]| {
        let min = ln_floored(seg[seg.len() - 1]);
        seg.iter().map(|&x| ln_floored(x) - min).sum::<f64>()
    };
    let (vo, vq) = (volume(so), volume(sq));
    if vo == 0.0 {
        return Err(MetricsError::Undefined {
            metric: Metric::BiasFlv,
            reason: "observed low-flow log volume is zero",
        });
    }
    Ok(-100.0 * (vq - vo) / vo)
}
