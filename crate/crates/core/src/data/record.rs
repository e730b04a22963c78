use alloc::string::String;
use alloc::vec::Vec;

use super::DataError;
use chrono::{Days, NaiveDate};

/// Static catchment descriptors in file and model order.
pub const STATIC_ATTRIBUTES: [&str; 17] = [
    "elev_mean",
    "slope_mean",
    "area",
    "forest_perc",
    "bedrock_depth",
    "water_table_depth",
    "sand_perc",
    "silt_perc",
    "clay_perc",
    "geol_permeability",
    "pressure_mean",
    "pet_mean",
    "aridity",
    "high_prec_freq",
    "high_prec_dur",
    "low_prec_freq",
    "low_prec_dur",
];

/// Daily forcing columns in normalisation order.
pub const DYNAMIC_FEATURES: [&str; 5] = [
    "precip_mm",
    "soil_moisture_kgm2",
    "tmin_c",
    "tmean_c",
    "tmax_c",
];

/// One calendar day. `None` marks a gap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DailyRow {
    pub date: NaiveDate,
    /// mm/day
    pub precip: Option<f64>,
    /// Top 10 cm of soil, kg/m² (numerically mm).
    pub soil_moisture: Option<f64>,
    pub tmin: Option<f64>,
    pub tmean: Option<f64>,
    pub tmax: Option<f64>,
    /// mm/day
    pub streamflow: Option<f64>,
    /// `Some(true)` when the streamflow value passed quality control.
    pub quality: Option<bool>,
}

impl DailyRow {
    pub fn gap(date: NaiveDate) -> Self {
        Self {
            date,
            precip: None,
            soil_moisture: None,
            tmin: None,
            tmean: None,
            tmax: None,
            streamflow: None,
            quality: None,
        }
    }

    /// Precipitation, soil moisture and the three temperatures in
    /// [`DYNAMIC_FEATURES`] order.
    pub fn dynamics(&self) -> [Option<f64>; 5] {
        [
            self.precip,
            self.soil_moisture,
            self.tmin,
            self.tmean,
            self.tmax,
        ]
    }

    pub fn inputs_complete(&self) -> bool {
        self.dynamics().iter().all(Option::is_some)
    }

    pub fn passes_quality(&self) -> bool {
        self.quality == Some(true) && self.streamflow.is_some()
    }
}

/// Daily series and static attributes of one gauge on a dense calendar.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeRecord {
    gauge_id: String,
    latitude: f64,
    longitude: f64,
    attributes: Vec<f64>,
    rows: Vec<DailyRow>,
}

impl GaugeRecord {
    /// Validates `rows` and inserts gap rows for calendar days that are
    /// absent. Row numbers in errors count data rows from 1.
    pub fn new(
        gauge_id: impl Into<String>,
        latitude: f64,
        longitude: f64,
        attributes: Vec<f64>,
        rows: Vec<DailyRow>,
    ) -> Result<Self, DataError> {
        let gauge = gauge_id.into();
        if !(latitude.is_finite()
            && longitude.is_finite()
            && latitude.abs() <= 90.0
            && longitude.abs() <= 180.0)
        {
            return Err(DataError::InvalidCoordinates {
                gauge,
                latitude,
                longitude,
            });
        }
        if attributes.len() != STATIC_ATTRIBUTES.len() {
            return Err(DataError::AttributeCount {
                gauge,
                expected: STATIC_ATTRIBUTES.len(),
                found: attributes.len(),
            });
        }
        if let Some(i) = attributes.iter().position(|v| !v.is_finite()) {
            return Err(DataError::NonFiniteAttribute {
                gauge,
                name: STATIC_ATTRIBUTES[i],
            });
        }
        if rows.is_empty() {
            return Err(DataError::EmptyRecord { gauge });
        }
        let mut dense: Vec<DailyRow> = Vec::with_capacity(rows.len());
        for (i, row) in rows.into_iter().enumerate() {
            let n = i + 1;
            check_row(&gauge, n, &row)?;
            if let Some(prev) = dense.last() {
                if row.date == prev.date {
                    return Err(DataError::DuplicateDate {
                        gauge,
                        row: n,
                        date: row.date,
                    });
                }
                if row.date < prev.date {
                    return Err(DataError::NonMonotoneDate {
                        gauge,
                        row: n,
                        date: row.date,
                    });
                }
                let mut next = prev.date + Days::new(1);
                while next < row.date {
                    dense.push(DailyRow::gap(next));
                    next = next + Days::new(1);
                }
            }
            dense.push(row);
        }
        Ok(Self {
            gauge_id: gauge,
            latitude,
            longitude,
            attributes,
            rows: dense,
        })
    }

    pub fn gauge_id(&self) -> &str {
        &self.gauge_id
    }

    pub fn latitude(&self) -> f64 {
        self.latitude
    }

    pub fn longitude(&self) -> f64 {
        self.longitude
    }

    /// Static attributes in [`STATIC_ATTRIBUTES`] order.
    pub fn attributes(&self) -> &[f64] {
        &self.attributes
    }

    pub fn rows(&self) -> &[DailyRow] {
        &self.rows
    }

    pub fn start(&self) -> NaiveDate {
        self.rows[0].date
    }

    pub fn end(&self) -> NaiveDate {
        self.rows[self.rows.len() - 1].date
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Position of `date` in [`rows`](Self::rows).
    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        let offset = date.signed_duration_since(self.start()).num_days();
        usize::try_from(offset)
            .ok()
            .filter(|&i| i < self.rows.len())
    }

    pub fn quality_days(&self) -> usize {
        self.rows.iter().filter(|r| r.passes_quality()).count()
    }

    /// Copy restricted to rows whose date satisfies `keep`, or `None` if no
    /// row does. Dropped interior days become gaps.
    pub fn filtered(&self, mut keep: impl FnMut(NaiveDate) -> bool) -> Option<Self> {
        let rows: Vec<DailyRow> = self.rows.iter().filter(|r| keep(r.date)).copied().collect();
        if rows.is_empty() {
            return None;
        }
        Some(
            Self::new(
                self.gauge_id.clone(),
                self.latitude,
                self.longitude,
                self.attributes.clone(),
                rows,
            )
            .expect("subset of a valid record"),
        )
    }
}

fn check_row(gauge: &str, row: usize, r: &DailyRow) -> Result<(), DataError> {
    let fields = [
        ("precip_mm", r.precip, true),
        ("soil_moisture_kgm2", r.soil_moisture, true),
        ("tmin_c", r.tmin, false),
        ("tmean_c", r.tmean, false),
        ("tmax_c", r.tmax, false),
        ("streamflow_mm", r.streamflow, true),
    ];
    for (column, value, nonnegative) in fields {
        let Some(v) = value else { continue };
        if !v.is_finite() {
            return Err(DataError::NonFiniteValue {
                gauge: gauge.into(),
                row,
                column,
            });
        }
        if nonnegative && v < 0.0 {
            return Err(DataError::NegativeValue {
                gauge: gauge.into(),
                row,
                column,
                value: v,
            });
        }
    }
    Ok(())
}
