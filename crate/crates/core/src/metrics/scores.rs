use alloc::string::String;

use serde::{Deserialize, Serialize};

use super::{bias_fhv, bias_flv, bias_fms, mean, MetricsError, PairedSeries};
use crate::math;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Metric {
    Nse,
    Kge,
    Rmse,
    BiasFhv,
    BiasFms,
    BiasFlv,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::Nse,
        Metric::Kge,
        Metric::Rmse,
        Metric::BiasFhv,
        Metric::BiasFms,
        Metric::BiasFlv,
    ];

    /// Column name in score tables.
    pub fn column(self) -> &'static str {
        match self {
            Metric::Nse => "nse",
            Metric::Kge => "kge",
            Metric::Rmse => "rmse_mm",
            Metric::BiasFhv => "biasfhv_pct",
            Metric::BiasFms => "biasfms_pct",
            Metric::BiasFlv => "biasflv_pct",
        }
    }

    pub fn is_bias(self) -> bool {
        matches!(self, Metric::BiasFhv | Metric::BiasFms | Metric::BiasFlv)
    }
}

impl core::fmt::Display for Metric {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Metric::Nse => "NSE",
            Metric::Kge => "KGE",
            Metric::Rmse => "RMSE",
            Metric::BiasFhv => "%BiasFHV",
            Metric::BiasFms => "%BiasFMS",
            Metric::BiasFlv => "%BiasFLV",
        })
    }
}

fn undefined(metric: Metric, reason: &'static str) -> MetricsError {
    MetricsError::Undefined { metric, reason }
}

/// Nash–Sutcliffe efficiency, `1 − Σ(s−o)² / Σ(o−ō)²`.
pub fn nse(s: &PairedSeries) -> Result<f64, MetricsError> {
    let (o, q) = (s.observed(), s.simulated());
    let m = mean(o);
    let den: f64 = o.iter().map(|x| (x - m) * (x - m)).sum();
    if den == 0.0 {
        return Err(undefined(Metric::Nse, "observed series has zero variance"));
    }
    let num: f64 = o.iter().zip(q).map(|(x, y)| (y - x) * (y - x)).sum();
    Ok(1.0 - num / den)
}

/// Kling–Gupta efficiency from Pearson correlation `r`, variability ratio
/// `α = σ_s/σ_o` and bias ratio `β = μ_s/μ_o`.
pub fn kge(s: &PairedSeries) -> Result<f64, MetricsError> {
    let (o, q) = (s.observed(), s.simulated());
    let (mo, mq) = (mean(o), mean(q));
    if mo == 0.0 {
        return Err(undefined(Metric::Kge, "observed mean is zero"));
    }
    let (mut so, mut sq, mut cov) = (0.0, 0.0, 0.0);
    for (x, y) in o.iter().zip(q) {
        so += (x - mo) * (x - mo);
        sq += (y - mq) * (y - mq);
        cov += (x - mo) * (y - mq);
    }
    if so == 0.0 {
        return Err(undefined(Metric::Kge, "observed series has zero variance"));
    }
    if sq == 0.0 {
        return Err(undefined(Metric::Kge, "simulated series has zero variance"));
    }
    let r = cov / math::sqrt(so * sq);
    let alpha = math::sqrt(sq / so);
    let beta = mq / mo;
    let d = (r - 1.0) * (r - 1.0) + (alpha - 1.0) * (alpha - 1.0) + (beta - 1.0) * (beta - 1.0);
    Ok(1.0 - math::sqrt(d))
}

/// Root mean squared error, mm/day.
pub fn rmse(s: &PairedSeries) -> f64 {
    let sq: f64 = s
        .observed()
        .iter()
        .zip(s.simulated())
        .map(|(x, y)| (y - x) * (y - x))
        .sum();
    math::sqrt(sq / s.len() as f64)
}

/// The six scores of one gauge; `None` marks an undefined score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub gauge_id: String,
    pub nse: Option<f64>,
    pub kge: Option<f64>,
    pub rmse: Option<f64>,
    pub bias_fhv: Option<f64>,
    pub bias_fms: Option<f64>,
    pub bias_flv: Option<f64>,
}

impl ScoreReport {
    pub fn get(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Nse => self.nse,
            Metric::Kge => self.kge,
            Metric::Rmse => self.rmse,
            Metric::BiasFhv => self.bias_fhv,
            Metric::BiasFms => self.bias_fms,
            Metric::BiasFlv => self.bias_flv,
        }
    }
}

pub fn score_report(gauge_id: impl Into<String>, s: &PairedSeries) -> ScoreReport {
    ScoreReport {
        gauge_id: gauge_id.into(),
        nse: nse(s).ok(),
        kge: kge(s).ok(),
        rmse: Some(rmse(s)),
        bias_fhv: bias_fhv(s).ok(),
        bias_fms: bias_fms(s).ok(),
        bias_flv: bias_flv(s).ok(),
    }
}
