use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::GaugeRecord;

/// Days per year of record when converting quality-passing days to years.
/// A calendar year without a leap day must count as a full year.
pub const DAYS_PER_YEAR: f64 = 365.0;

/// Closed longitude/latitude box in signed degrees (east and north
/// positive).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub west: f64,
    pub east: f64,
    pub south: f64,
    pub north: f64,
}

impl BoundingBox {
    /// Box spanned by two `(longitude, latitude)` corners given in any
    /// order.
    pub fn from_corners(a: (f64, f64), b: (f64, f64)) -> Self {
        Self {
            west: a.0.min(b.0),
            east: a.0.max(b.0),
            south: a.1.min(b.1),
            north: a.1.max(b.1),
        }
    }

    /// The study region in south-eastern Brazil, (54 W, 19.5 S) to
    /// (43.5 W, 27 S).
    pub fn southeast_brazil() -> Self {
        Self::from_corners((-54.0, -19.5), (-43.5, -27.0))
    }

    pub fn contains(&self, longitude: f64, latitude: f64) -> bool {
        self.west <= longitude
            && longitude <= self.east
            && self.south <= latitude
            && latitude <= self.north
    }
}

/// Ids of gauges inside `bbox` with at least `min_years` of
/// quality-passing streamflow days, in input order.
pub fn select_gauges(records: &[GaugeRecord], bbox: &BoundingBox, min_years: f64) -> Vec<String> {
    records
        .iter()
        .filter(|r| bbox.contains(r.longitude(), r.latitude()))
        .filter(|r| r.quality_days() as f64 / DAYS_PER_YEAR >= min_years)
        .map(|r| r.gauge_id().into())
        .collect()
}
