//! CSV and text outputs of training and evaluation.

use std::io::{Read, Write};
use std::path::Path;

use fslstm_core::data::SkipReport;
use fslstm_core::metrics::{Fdc, Metric, ScoreReport, Summary};
use fslstm_core::train::{EpochLog, GaugePredictions};

use crate::CliError;

pub const PREDICTIONS_HEADER: [&str; 3] = ["date", "observed_mm", "predicted_mm"];
pub const TRAINING_LOG_HEADER: [&str; 4] = ["epoch", "train_loss", "valid_loss", "seconds"];
pub const SCORES_HEADER: [&str; 7] = [
    "gauge_id",
    "nse",
    "kge",
    "rmse_mm",
    "biasfhv_pct",
    "biasfms_pct",
    "biasflv_pct",
];
pub const SUMMARY_HEADER: [&str; 6] = [
    "metric",
    "mean",
    "sd",
    "defined",
    "undefined",
    "within_25pct",
];
pub const FDC_HEADER: [&str; 2] = ["exceedance_prob", "flow_mm"];
pub const MANIFEST_HEADER: [&str; 11] = [
    "gauge_id",
    "lat",
    "lon",
    "first_date",
    "last_date",
    "rows",
    "quality_days",
    "train_samples",
    "validation_samples",
    "test_samples",
    "dropped_windows",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::Writer::from_writer(out)
}

fn rows<W: Write, I, R>(path: &Path, out: W, header: &[&str], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let err = |e: csv::Error| CliError::io(path, e);
    let mut w = writer(out);
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_predictions<W: Write>(
    path: &Path,
    out: W,
    p: &GaugePredictions,
) -> Result<(), CliError> {
    let lines = p
        .dates
        .iter()
        .zip(&p.observed)
        .zip(&p.predicted)
        .map(|((d, o), s)| [d.to_string(), o.to_string(), s.to_string()]);
    rows(path, out, &PREDICTIONS_HEADER, lines)
}

/// One line per epoch; `seconds` is the wall time of each epoch.
pub fn write_training_log<W: Write>(
    path: &Path,
    out: W,
    history: &[EpochLog],
    seconds: &[f64],
) -> Result<(), CliError> {
    let lines = history.iter().zip(seconds).map(|(h, s)| {
        [
            h.epoch.to_string(),
            h.train_loss.to_string(),
            opt(h.valid_loss),
            format!("{s:.3}"),
        ]
    });
    rows(path, out, &TRAINING_LOG_HEADER, lines)
}

pub fn write_scores<W: Write>(
    path: &Path,
    out: W,
    reports: &[ScoreReport],
) -> Result<(), CliError> {
    let lines = reports.iter().map(|r| {
        let mut line = vec![r.gauge_id.clone()];
        line.extend(Metric::ALL.iter().map(|m| opt(r.get(*m))));
        line
    });
    rows(path, out, &SCORES_HEADER, lines)
}

/// Reads a scores table written by [`write_scores`]; empty cells are
/// undefined scores.
pub fn read_scores<R: Read>(path: &Path, input: R) -> Result<Vec<ScoreReport>, CliError> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers().map_err(|e| CliError::io(path, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != SCORES_HEADER {
        return Err(CliError::Data(format!(
            "{}: expected header `{}`",
            path.display(),
            SCORES_HEADER.join(",")
        )));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::io(path, e))?;
        let mut cells = Vec::with_capacity(6);
        for (k, field) in rec.iter().enumerate().skip(1) {
            cells.push(if field.is_empty() {
                None
            } else {
                Some(field.parse::<f64>().map_err(|_| {
                    CliError::Data(format!(
                        "{}: row {}: `{}` value `{field}` is not a number",
                        path.display(),
                        i + 1,
                        SCORES_HEADER[k]
                    ))
                })?)
            });
        }
        out.push(ScoreReport {
            gauge_id: rec[0].to_string(),
            nse: cells[0],
            kge: cells[1],
            rmse: cells[2],
            bias_fhv: cells[3],
            bias_fms: cells[4],
            bias_flv: cells[5],
        });
    }
    Ok(out)
}

/// Mean, standard deviation and counts per metric; `within_25pct` is the
/// share of gauges with |bias| ≤ 25 % and is empty for the other metrics.
pub fn write_summary<W: Write>(path: &Path, out: W, summary: &Summary) -> Result<(), CliError> {
    let lines = summary.metrics.iter().map(|m| {
        [
            m.metric.column().to_string(),
            opt(m.mean),
            opt(m.sd),
            m.defined.to_string(),
            m.undefined.to_string(),
            opt(m.within_tolerance),
        ]
    });
    rows(path, out, &SUMMARY_HEADER, lines)
}

/// Flow duration curve points; flows are not floored.
pub fn write_fdc<W: Write>(path: &Path, out: W, curve: &Fdc) -> Result<(), CliError> {
    let lines = curve
        .probs
        .iter()
        .zip(&curve.flows)
        .map(|(p, q)| [p.to_string(), q.to_string()]);
    rows(path, out, &FDC_HEADER, lines)
}

/// Plain-text skip counts, one gauge per line.
pub fn write_skips<W: Write>(
    path: &Path,
    mut out: W,
    reports: &[SkipReport],
) -> Result<(), CliError> {
    for r in reports {
        writeln!(out, "{r}").map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}

/// One manifest line.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifestEntry {
    pub gauge_id: String,
    pub latitude: f64,
    pub longitude: f64,
    pub first_date: String,
    pub last_date: String,
    pub rows: usize,
    pub quality_days: usize,
    pub samples: [usize; 3],
    pub dropped: usize,
}

pub fn write_manifest<W: Write>(
    path: &Path,
    out: W,
    entries: &[ManifestEntry],
) -> Result<(), CliError> {
    let lines = entries.iter().map(|e| {
        [
            e.gauge_id.clone(),
            e.latitude.to_string(),
            e.longitude.to_string(),
            e.first_date.clone(),
            e.last_date.clone(),
            e.rows.to_string(),
            e.quality_days.to_string(),
            e.samples[0].to_string(),
            e.samples[1].to_string(),
            e.samples[2].to_string(),
            e.dropped.to_string(),
        ]
    });
    rows(path, out, &MANIFEST_HEADER, lines)
}

/// Gauge ids listed in a manifest, in file order.
pub fn read_manifest_ids<R: Read>(path: &Path, input: R) -> Result<Vec<String>, CliError> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers().map_err(|e| CliError::io(path, e))?.clone();
    if headers.get(0) != Some("gauge_id") {
        return Err(CliError::Data(format!(
            "{}: not a manifest (first column must be gauge_id)",
            path.display()
        )));
    }
    rdr.records()
        .map(|r| {
            r.map(|r| r[0].to_string())
                .map_err(|e| CliError::io(path, e))
        })
        .collect()
}
