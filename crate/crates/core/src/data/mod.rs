//! Gauge records, gauge selection, normalisation, windowing and the
//! synthetic fast/slow catchment.
//!
//! A [`GaugeRecord`] is a dense daily calendar: every day between the first
//! and last row is present, and a missing measurement is `None`. Gaps are
//! never imputed. A window that touches a gap is dropped and counted in a
//! [`SkipReport`].

mod normalize;
mod record;
mod samples;
mod select;
mod split;
mod synthetic;

use alloc::string::String;

use chrono::NaiveDate;

pub use normalize::{FeatureStats, NormalizationStats, STD_FLOOR};
pub use record::{DailyRow, GaugeRecord, DYNAMIC_FEATURES, STATIC_ATTRIBUTES};
pub use samples::{
    build_samples, PreparedGauge, Sample, SampleSets, SkipReport, SplitSkips, WindowInputs, WINDOW,
};
pub use select::{select_gauges, BoundingBox, DAYS_PER_YEAR};
pub use split::{DateRange, Split, SplitSpec};
pub use synthetic::{generate_synthetic, SyntheticSpec, MAX_CLAMPED_FRACTION};

/// Number of auxiliary inputs per step: three temperatures and the static
/// attributes.
pub const AUX_WIDTH: usize = 3 + STATIC_ATTRIBUTES.len();

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DataError {
    #[error("gauge {gauge}: date {date} appears more than once (row {row})")]
    DuplicateDate {
        gauge: String,
        row: usize,
        date: NaiveDate,
    },
    #[error("gauge {gauge}: date {date} at row {row} is earlier than the row before it")]
    NonMonotoneDate {
        gauge: String,
        row: usize,
        date: NaiveDate,
    },
    #[error("gauge {gauge}: negative {column} ({value}) at row {row}")]
    NegativeValue {
        gauge: String,
        row: usize,
        column: &'static str,
        value: f64,
    },
    #[error("gauge {gauge}: non-finite {column} at row {row}")]
    NonFiniteValue {
        gauge: String,
        row: usize,
        column: &'static str,
    },
    #[error("gauge {gauge}: record has no rows")]
    EmptyRecord { gauge: String },
    #[error("gauge {gauge}: expected {expected} static attributes, got {found}")]
    AttributeCount {
        gauge: String,
        expected: usize,
        found: usize,
    },
    #[error("gauge {gauge}: attribute `{name}` is not finite")]
    NonFiniteAttribute { gauge: String, name: &'static str },
    #[error("gauge {gauge}: coordinates ({latitude}, {longitude}) are out of range")]
    InvalidCoordinates {
        gauge: String,
        latitude: f64,
        longitude: f64,
    },
    #[error("date range {start}..={end} ends before it starts")]
    InvertedRange { start: NaiveDate, end: NaiveDate },
    #[error("the {first} and {second} periods overlap")]
    OverlappingSplits { first: Split, second: Split },
    #[error("no training-period values for `{feature}`")]
    NoTrainingData { feature: &'static str },
    #[error("statistics of `{feature}` overflow")]
    NonFiniteStatistic { feature: &'static str },
    #[error("no gauges to fit statistics on")]
    NoGauges,
    #[error("normalisation statistics were not fitted for gauge {0}")]
    UnknownGauge(String),
    #[error("normalisation statistics have {dynamic} dynamic and {statics} static entries")]
    MalformedStats { dynamic: usize, statics: usize },
    #[error("window length must be positive")]
    ZeroWindow,
    #[error("invalid synthetic catchment: {0}")]
    InvalidSynthetic(&'static str),
    #[error(
        "synthetic catchment is degenerate: {clamped} of {days} days clamped at zero \
         (limit {limit_percent}%)"
    )]
    DegenerateSynthetic {
        clamped: usize,
        days: usize,
        limit_percent: f64,
    },
}
