//! The five subcommands. Each archives its resolved configuration as
//! `<command>.conf` in the output directory.
//!
//! | command | reads | writes (under `output_dir` unless noted) |
//! |---------|-------|------------------------------------------|
//! | `simulate` | | `<data_dir>/<id>.csv`, `<data_dir>/attributes.csv` |
//! | `ingest` | gauge and attribute CSVs | `manifest.csv`, `skips.txt` |
//! | `train` | `manifest.csv` | checkpoint, `training_log.csv` |
//! | `evaluate` | checkpoint, `manifest.csv` | `predictions/`, `fdc/`, `scores.csv`, `summary.csv`, `skips_test.txt` |
//! | `report` | `scores.csv` | `summary.csv` |

use std::path::{Path, PathBuf};
use std::time::Instant;

use fslstm_core::data::{
    generate_synthetic, select_gauges, GaugeRecord, SkipReport, Split, SyntheticSpec,
};
use fslstm_core::metrics::{fdc, score_report, summarize, PairedSeries, ScoreReport, Summary};
use fslstm_core::train::{
    evaluate, train_with, Dataset, GaugePredictions, ModelPredictor, Predictor, TrainReport,
};

use crate::checkpoint::{load_checkpoint, write_checkpoint};
use crate::config::RunConfig;
use crate::io::{
    gauge_path, load_gauge, read_attributes, write_attributes, write_file, write_gauge_csv,
    GaugeAttributes,
};
use crate::results::{
    read_manifest_ids, read_scores, write_fdc, write_manifest, write_predictions, write_scores,
    write_skips, write_summary, write_training_log, ManifestEntry,
};
use crate::CliError;

pub const MANIFEST: &str = "manifest.csv";
pub const SKIPS: &str = "skips.txt";
pub const TRAINING_LOG: &str = "training_log.csv";
pub const SCORES: &str = "scores.csv";
pub const SUMMARY: &str = "summary.csv";
pub const TEST_SKIPS: &str = "skips_test.txt";
pub const PREDICTIONS_DIR: &str = "predictions";
pub const FDC_DIR: &str = "fdc";

fn prepare(config: &RunConfig, command: &str) -> Result<(), CliError> {
    for w in config.validate()? {
        log::warn!("{w}");
    }
    config.archive(command)?;
    Ok(())
}

/// Attribute lines for the configured gauges, in attributes-file order.
fn attributes_for(config: &RunConfig, ids: &[String]) -> Result<Vec<GaugeAttributes>, CliError> {
    let path = config.attributes_path();
    let all = read_attributes(&path)?;
    if ids.is_empty() {
        return Ok(all);
    }
    ids.iter()
        .map(|id| {
            all.iter()
                .find(|a| &a.gauge_id == id)
                .cloned()
                .ok_or_else(|| {
                    CliError::Data(format!(
                        "{}: no attributes for gauge `{id}`",
                        path.display()
                    ))
                })
        })
        .collect()
}

fn load_records(config: &RunConfig, ids: &[String]) -> Result<Vec<GaugeRecord>, CliError> {
    attributes_for(config, ids)?
        .iter()
        .map(|a| load_gauge(&config.data_dir, a))
        .collect()
}

fn manifest_ids(config: &RunConfig) -> Result<Vec<String>, CliError> {
    let path = config.output_dir.join(MANIFEST);
    let file = std::fs::File::open(&path)
        .map_err(|e| CliError::Data(format!("{}: {e} (run `ingest` first)", path.display())))?;
    read_manifest_ids(&path, file)
}

fn skip_reports(data: &Dataset) -> Vec<SkipReport> {
    data.gauges().iter().map(|g| g.skips.clone()).collect()
}

/// Outcome of `ingest`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ingested {
    pub manifest: PathBuf,
    pub entries: Vec<ManifestEntry>,
    pub skips: Vec<SkipReport>,
}

/// Loads the candidate gauges, keeps those inside the box with enough
/// quality-controlled years, and writes the manifest and skip report.
pub fn cmd_ingest(config: &RunConfig) -> Result<Ingested, CliError> {
    prepare(config, "ingest")?;
    let candidates = load_records(config, &config.gauges)?;
    let selected = select_gauges(&candidates, &config.bbox, config.min_years);
    if selected.is_empty() {
        let b = &config.bbox;
        return Err(CliError::Data(format!(
            "none of the {} candidate gauges lies inside lon [{}, {}], lat [{}, {}] \
             with at least {} years of quality-controlled streamflow",
            candidates.len(),
            b.west,
            b.east,
            b.south,
            b.north,
            config.min_years
        )));
    }
    let records: Vec<GaugeRecord> = candidates
        .into_iter()
        .filter(|r| selected.iter().any(|id| id == r.gauge_id()))
        .collect();
    let data = Dataset::prepare(&records, &config.splits, config.train.window)?;
    let mut entries = Vec::with_capacity(records.len());
    for g in data.gauges() {
        let r = records
            .iter()
            .find(|r| r.gauge_id() == g.gauge_id())
            .expect("prepared gauges come from the records");
        if g.skips.lacks_validation() {
            log::warn!("gauge {} has no validation samples", g.gauge_id());
        }
        entries.push(ManifestEntry {
            gauge_id: r.gauge_id().into(),
            latitude: r.latitude(),
            longitude: r.longitude(),
            first_date: r.start().to_string(),
            last_date: r.end().to_string(),
            rows: r.len(),
            quality_days: r.quality_days(),
            samples: Split::ALL.map(|s| g.samples.get(s).len()),
            dropped: g.skips.dropped(),
        });
    }
    let skips = skip_reports(&data);
    let manifest = config.output_dir.join(MANIFEST);
    write_file(&manifest, |out| write_manifest(&manifest, out, &entries))?;
    let skips_path = config.output_dir.join(SKIPS);
    write_file(&skips_path, |out| write_skips(&skips_path, out, &skips))?;
    log::info!("selected {} gauges", entries.len());
    Ok(Ingested {
        manifest,
        entries,
        skips,
    })
}

/// Outcome of `train`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trained {
    pub checkpoint: PathBuf,
    pub report: TrainReport,
}

/// Trains on the gauges of the manifest and writes the best checkpoint and
/// the per-epoch log.
pub fn cmd_train(config: &RunConfig) -> Result<Trained, CliError> {
    prepare(config, "train")?;
    let records = load_records(config, &manifest_ids(config)?)?;
    let data = Dataset::prepare(&records, &config.splits, config.train.window)?;
    let mut seconds = Vec::with_capacity(config.train.epochs);
    let mut clock = Instant::now();
    let report = train_with(&data, &config.train, &mut |log| {
        let s = clock.elapsed().as_secs_f64();
        seconds.push(s);
        clock = Instant::now();
        log::info!(
            "epoch {}: train {:.6}, validation {}, {s:.1}s",
            log.epoch,
            log.train_loss,
            log.valid_loss
                .map_or_else(|| "n/a".to_string(), |v| format!("{v:.6}"))
        );
    })?;
    let ck = config.checkpoint_path();
    write_file(&ck, |out| write_checkpoint(&ck, out, &report.checkpoint))?;
    let log_path = config.output_dir.join(TRAINING_LOG);
    write_file(&log_path, |out| {
        write_training_log(&log_path, out, &report.checkpoint.history, &seconds)
    })?;
    log::info!(
        "kept epoch {} (validation loss {:?})",
        report.checkpoint.epoch,
        report.checkpoint.validation_loss
    );
    Ok(Trained {
        checkpoint: ck,
        report,
    })
}

fn score(p: &GaugePredictions) -> ScoreReport {
    match PairedSeries::new(&p.observed, &p.predicted) {
        Ok(s) => score_report(&p.gauge_id, &s),
        Err(e) => {
            log::warn!("gauge {}: no scores ({e})", p.gauge_id);
            ScoreReport {
                gauge_id: p.gauge_id.clone(),
                nse: None,
                kge: None,
                rmse: None,
                bias_fhv: None,
                bias_fms: None,
                bias_flv: None,
            }
        }
    }
}

/// Outcome of `evaluate`.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluated {
    pub predictions: Vec<GaugePredictions>,
    pub scores: Vec<ScoreReport>,
    pub summary: Summary,
}

/// Writes per-gauge predictions and flow duration curves, the scores
/// table and its summary.
pub fn write_evaluation(
    dir: &Path,
    predictions: Vec<GaugePredictions>,
) -> Result<Evaluated, CliError> {
    let mut scores = Vec::with_capacity(predictions.len());
    for p in &predictions {
        let path = dir
            .join(PREDICTIONS_DIR)
            .join(format!("{}.csv", p.gauge_id));
        write_file(&path, |out| write_predictions(&path, out, p))?;
        for (series, values) in [("observed", &p.observed), ("predicted", &p.predicted)] {
            if let Ok(curve) = fdc(values) {
                let path = dir
                    .join(FDC_DIR)
                    .join(format!("{}_{series}.csv", p.gauge_id));
                write_file(&path, |out| write_fdc(&path, out, &curve))?;
            }
        }
        scores.push(score(p));
    }
    let path = dir.join(SCORES);
    write_file(&path, |out| write_scores(&path, out, &scores))?;
    let summary = summarize(&scores)?;
    let path = dir.join(SUMMARY);
    write_file(&path, |out| write_summary(&path, out, &summary))?;
    Ok(Evaluated {
        predictions,
        scores,
        summary,
    })
}

/// Predicts the test period of every manifest gauge with `predictor`.
pub fn evaluate_with<P: Predictor>(
    config: &RunConfig,
    predictor: &P,
    data: &Dataset,
) -> Result<Evaluated, CliError> {
    let predictions = evaluate(predictor, data.gauges(), Split::Test)?;
    let skips = skip_reports(data);
    let path = config.output_dir.join(TEST_SKIPS);
    write_file(&path, |out| write_skips(&path, out, &skips))?;
    write_evaluation(&config.output_dir, predictions)
}

/// Windows the manifest gauges with the checkpoint's statistics and scores
/// the test period.
pub fn cmd_evaluate(config: &RunConfig) -> Result<Evaluated, CliError> {
    prepare(config, "evaluate")?;
    let ck = load_checkpoint(&config.checkpoint_path())?;
    let records = load_records(config, &manifest_ids(config)?)?;
    let data = Dataset::with_stats(&records, &config.splits, ck.stats.clone(), ck.config.window)?;
    let predictor = ModelPredictor::new(&ck)?;
    evaluate_with(config, &predictor, &data)
}

/// Writes `synthetic_gauges` generated catchments, seeded `seed`,
/// `seed + 1`, ..., into the data directory.
pub fn cmd_simulate(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    prepare(config, "simulate")?;
    let records = (0..config.synthetic_gauges as u64)
        .map(|i| {
            generate_synthetic(&SyntheticSpec {
                seed: config.synthetic.seed + i,
                ..config.synthetic
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut written = Vec::with_capacity(records.len() + 1);
    for r in &records {
        let path = gauge_path(&config.data_dir, r.gauge_id());
        write_file(&path, |out| write_gauge_csv(&path, out, r))?;
        written.push(path);
    }
    let path = config.attributes_path();
    write_file(&path, |out| write_attributes(&path, out, &records))?;
    written.push(path);
    Ok(written)
}

/// Summarises `scores.csv` into `summary.csv`.
pub fn cmd_report(config: &RunConfig) -> Result<Summary, CliError> {
    prepare(config, "report")?;
    let path = config.output_dir.join(SCORES);
    let file = std::fs::File::open(&path)
        .map_err(|e| CliError::Data(format!("{}: {e} (run `evaluate` first)", path.display())))?;
    let reports = read_scores(&path, file)?;
    let summary = summarize(&reports)?;
    let out = config.output_dir.join(SUMMARY);
    write_file(&out, |w| write_summary(&out, w, &summary))?;
    Ok(summary)
}
