use alloc::format;
use alloc::vec::Vec;

use chrono::{Datelike, Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use super::{DailyRow, DataError, GaugeRecord, STATIC_ATTRIBUTES};
use crate::math;

/// Largest fraction of days whose raw streamflow may fall below zero.
pub const MAX_CLAMPED_FRACTION: f64 = 0.01;

const WALK_SD: f64 = 0.05;
const WET_PROBABILITY: f64 = 0.4;
const MEAN_WET_PRECIP: f64 = 5.0;
const MEAN_TEMPERATURE: f64 = 20.0;
const SEASONAL_AMPLITUDE: f64 = 5.0;
const DIURNAL_HALF_RANGE: f64 = 4.0;

/// A catchment whose streamflow is `Q = α·w·p + β·w + γ` plus Gaussian
/// noise, clamped at zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub noise_sd: f64,
    pub days: usize,
    pub seed: u64,
    pub start: NaiveDate,
    pub latitude: f64,
    pub longitude: f64,
}

impl SyntheticSpec {
    /// Starts on 1990-10-01 at (50 W, 22 S).
    pub fn new(alpha: f64, beta: f64, gamma: f64, noise_sd: f64, days: usize, seed: u64) -> Self {
        Self {
            alpha,
            beta,
            gamma,
            noise_sd,
            days,
            seed,
            start: NaiveDate::from_ymd_opt(1990, 10, 1).expect("valid literal date"),
            latitude: -22.0,
            longitude: -50.0,
        }
    }
}

fn reflect_unit(mut x: f64) -> f64 {
    loop {
        if x < 0.0 {
            x = -x;
        } else if x > 1.0 {
            x = 2.0 - x;
        } else {
            return x;
        }
    }
}

/// Daily record with soil moisture `w` as a reflected random walk on
/// `[0, 1]`, intermittent exponential precipitation `p`, seasonal
/// temperatures and streamflow from the fast/slow quadratic.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<GaugeRecord, DataError> {
    if spec.days < 366 {
        return Err(DataError::InvalidSynthetic(
            "at least 366 days are required",
        ));
    }
    if !(spec.noise_sd.is_finite() && spec.noise_sd >= 0.0) {
        return Err(DataError::InvalidSynthetic(
            "noise_sd must be finite and nonnegative",
        ));
    }
    if !(spec.alpha.is_finite() && spec.beta.is_finite() && spec.gamma.is_finite()) {
        return Err(DataError::InvalidSynthetic(
            "alpha, beta and gamma must be finite",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let rain = Exp::new(1.0 / MEAN_WET_PRECIP).expect("positive rate");
    let phase = rng.random_range(0.0..core::f64::consts::TAU);
    let attributes: Vec<f64> = STATIC_ATTRIBUTES
        .iter()
        .map(|_| rng.random_range(0.0..1.0))
        .collect();
    let mut w: f64 = rng.random_range(0.2..0.8);
    let mut clamped = 0usize;
    let mut rows = Vec::with_capacity(spec.days);
    for day in 0..spec.days {
        let date = spec.start + Days::new(day as u64);
        let p = if rng.random_bool(WET_PROBABILITY) {
            rain.sample(&mut rng)
        } else {
            0.0
        };
        let season = core::f64::consts::TAU * f64::from(date.ordinal0()) / 365.25 + phase;
        let z_t: f64 = StandardNormal.sample(&mut rng);
        let tmean = MEAN_TEMPERATURE + SEASONAL_AMPLITUDE * math::sin(season) + z_t;
        let lo: f64 = StandardNormal.sample(&mut rng);
        let hi: f64 = StandardNormal.sample(&mut rng);
        let noise: f64 = StandardNormal.sample(&mut rng);
        let raw = spec.alpha * w * p + spec.beta * w + spec.gamma + spec.noise_sd * noise;
        let q = if raw < 0.0 {
            clamped += 1;
            0.0
        } else {
            raw
        };
        rows.push(DailyRow {
            date,
            precip: Some(p),
            soil_moisture: Some(w),
            tmin: Some(tmean - DIURNAL_HALF_RANGE - lo.abs()),
            tmean: Some(tmean),
            tmax: Some(tmean + DIURNAL_HALF_RANGE + hi.abs()),
            streamflow: Some(q),
            quality: Some(true),
        });
        let step: f64 = StandardNormal.sample(&mut rng);
        w = reflect_unit(w + WALK_SD * step);
    }
    if clamped as f64 > MAX_CLAMPED_FRACTION * spec.days as f64 {
        return Err(DataError::DegenerateSynthetic {
            clamped,
            days: spec.days,
            limit_percent: MAX_CLAMPED_FRACTION * 100.0,
        });
    }
    GaugeRecord::new(
        format!("synthetic-{}", spec.seed),
        spec.latitude,
        spec.longitude,
        attributes,
        rows,
    )
}
