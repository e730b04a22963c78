//! Gauge and attribute CSV files.
//!
//! A gauge file is `<data_dir>/<gauge_id>.csv` with the columns of
//! [`GAUGE_HEADER`] in any order; an empty field is a gap. Streamflow is
//! catchment-depth mm/day, so discharge in m³/s must be converted before
//! ingestion. `quality` is `1` when the streamflow value passed quality
//! control and `0` otherwise.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use fslstm_core::data::{DailyRow, GaugeRecord, STATIC_ATTRIBUTES};

use crate::CliError;

pub const GAUGE_HEADER: [&str; 8] = [
    "date",
    "precip_mm",
    "soil_moisture_kgm2",
    "tmin_c",
    "tmean_c",
    "tmax_c",
    "streamflow_mm",
    "quality",
];

/// `gauge_id,lat,lon` followed by the 17 static attributes.
pub fn attributes_header() -> Vec<&'static str> {
    let mut h = vec!["gauge_id", "lat", "lon"];
    h.extend(STATIC_ATTRIBUTES);
    h
}

/// One line of the attributes file.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeAttributes {
    pub gauge_id: String,
    pub latitude: f64,
    pub longitude: f64,
    pub values: Vec<f64>,
}

fn data_err(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: {msg}", path.display()))
}

/// Position of each wanted column, or an error naming the first missing one.
fn column_positions(
    path: &Path,
    headers: &csv::StringRecord,
    wanted: &[&str],
) -> Result<Vec<usize>, CliError> {
    wanted
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h.trim() == *name)
                .ok_or_else(|| data_err(path, format!("missing column `{name}`")))
        })
        .collect()
}

fn number(path: &Path, line: u64, column: &str, field: &str) -> Result<Option<f64>, CliError> {
    let field = field.trim();
    if field.is_empty() {
        return Ok(None);
    }
    field.parse().map(Some).map_err(|_| {
        data_err(
            path,
            format!("row {line}: `{column}` value `{field}` is not a number"),
        )
    })
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input)
}

pub fn read_attributes(path: &Path) -> Result<Vec<GaugeAttributes>, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_attributes(path, file)
}

/// Parses an attributes table; `path` only labels errors.
pub fn parse_attributes<R: Read>(path: &Path, input: R) -> Result<Vec<GaugeAttributes>, CliError> {
    let mut rdr = reader(input);
    let headers = rdr.headers().map_err(|e| data_err(path, e))?.clone();
    let header = attributes_header();
    let pos = column_positions(path, &headers, &header)?;
    let mut out: Vec<GaugeAttributes> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 1;
        let rec = rec.map_err(|e| data_err(path, format!("row {line}: {e}")))?;
        let field = |k: usize| rec.get(pos[k]).unwrap_or("");
        let gauge_id = field(0).to_string();
        if gauge_id.is_empty() {
            return Err(data_err(path, format!("row {line}: empty gauge_id")));
        }
        if out.iter().any(|a| a.gauge_id == gauge_id) {
            return Err(data_err(
                path,
                format!("row {line}: gauge `{gauge_id}` listed twice"),
            ));
        }
        let mut values = Vec::with_capacity(header.len() - 1);
        for (k, name) in header.iter().enumerate().skip(1) {
            let v = number(path, line, name, field(k))?
                .ok_or_else(|| data_err(path, format!("row {line}: `{name}` is empty")))?;
            values.push(v);
        }
        out.push(GaugeAttributes {
            gauge_id,
            latitude: values[0],
            longitude: values[1],
            values: values.split_off(2),
        });
    }
    Ok(out)
}

/// Parses a gauge table into daily rows; `path` only labels errors.
pub fn parse_daily_rows<R: Read>(path: &Path, input: R) -> Result<Vec<DailyRow>, CliError> {
    let mut rdr = reader(input);
    let headers = rdr.headers().map_err(|e| data_err(path, e))?.clone();
    let pos = column_positions(path, &headers, &GAUGE_HEADER)?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 1;
        let rec = rec.map_err(|e| data_err(path, format!("row {line}: {e}")))?;
        let field = |k: usize| rec.get(pos[k]).unwrap_or("");
        let date = NaiveDate::parse_from_str(field(0), "%Y-%m-%d").map_err(|_| {
            data_err(
                path,
                format!("row {line}: `{}` is not a YYYY-MM-DD date", field(0)),
            )
        })?;
        let num = |k: usize| number(path, line, GAUGE_HEADER[k], field(k));
        let quality = match field(7) {
            "" => None,
            "1" | "true" => Some(true),
            "0" | "false" => Some(false),
            other => {
                return Err(data_err(
                    path,
                    format!("row {line}: `quality` must be 1 or 0, got `{other}`"),
                ))
            }
        };
        rows.push(DailyRow {
            date,
            precip: num(1)?,
            soil_moisture: num(2)?,
            tmin: num(3)?,
            tmean: num(4)?,
            tmax: num(5)?,
            streamflow: num(6)?,
            quality,
        });
    }
    Ok(rows)
}

pub fn gauge_path(data_dir: &Path, gauge_id: &str) -> PathBuf {
    data_dir.join(format!("{gauge_id}.csv"))
}

/// Loads `<data_dir>/<gauge_id>.csv` and attaches the attributes.
pub fn load_gauge(data_dir: &Path, attrs: &GaugeAttributes) -> Result<GaugeRecord, CliError> {
    let path = gauge_path(data_dir, &attrs.gauge_id);
    let file = std::fs::File::open(&path).map_err(|e| CliError::io(&path, e))?;
    let rows = parse_daily_rows(&path, file)?;
    GaugeRecord::new(
        attrs.gauge_id.clone(),
        attrs.latitude,
        attrs.longitude,
        attrs.values.clone(),
        rows,
    )
    .map_err(|e| data_err(&path, e))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::io(path, e)
}

/// Writes the daily rows of `record`, gap days as empty fields.
pub fn write_gauge_csv<W: Write>(
    path: &Path,
    out: W,
    record: &GaugeRecord,
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(GAUGE_HEADER).map_err(csv_err(path))?;
    for r in record.rows() {
        let quality = match r.quality {
            Some(true) => "1",
            Some(false) => "0",
            None => "",
        };
        w.write_record([
            r.date.to_string(),
            opt(r.precip),
            opt(r.soil_moisture),
            opt(r.tmin),
            opt(r.tmean),
            opt(r.tmax),
            opt(r.streamflow),
            quality.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_attributes<W: Write>(
    path: &Path,
    out: W,
    records: &[GaugeRecord],
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(attributes_header()).map_err(csv_err(path))?;
    for r in records {
        let mut row = vec![
            r.gauge_id().to_string(),
            r.latitude().to_string(),
            r.longitude().to_string(),
        ];
        row.extend(r.attributes().iter().map(f64::to_string));
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Creates `path` (and its parent directories) and hands it to `write`.
pub fn write_file(
    path: &Path,
    write: impl FnOnce(&mut std::io::BufWriter<std::fs::File>) -> Result<(), CliError>,
) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    write(&mut out)?;
    out.flush().map_err(|e| CliError::io(path, e))
}
