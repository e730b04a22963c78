//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown and
//! repeated keys are rejected. Precedence is command line, then file, then
//! defaults.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use fslstm_core::data::{BoundingBox, DateRange, SplitSpec, SyntheticSpec};
use fslstm_core::train::TrainConfig;

use crate::CliError;

/// Every accepted key with its help text, in resolved-file order.
pub const KEYS: &[(&str, &str)] = &[
    ("data_dir", "directory of per-gauge CSV files"),
    (
        "attributes",
        "attributes CSV (default: <data_dir>/attributes.csv)",
    ),
    (
        "gauges",
        "comma-separated gauge ids (default: every gauge in the attributes file)",
    ),
    (
        "output_dir",
        "directory for manifests, checkpoints and results",
    ),
    (
        "checkpoint",
        "checkpoint path (default: <output_dir>/checkpoint.json)",
    ),
    ("bbox_west", "selection box west edge, degrees"),
    ("bbox_east", "selection box east edge, degrees"),
    ("bbox_south", "selection box south edge, degrees"),
    ("bbox_north", "selection box north edge, degrees"),
    (
        "min_years",
        "minimum years of quality-controlled streamflow",
    ),
    ("train_start", "first training target date"),
    ("train_end", "last training target date"),
    ("valid_start", "first validation target date"),
    ("valid_end", "last validation target date"),
    ("test_start", "first test target date"),
    ("test_end", "last test target date"),
    ("model", "lstm, mclstm or fslstm"),
    ("cells", "memory cells or LSTM hidden units"),
    ("epochs", "training epochs"),
    ("batch", "samples per gradient step"),
    ("window", "input days per sample"),
    ("learning_rate", "Adam step size"),
    ("loss", "mse or nse_basin"),
    ("proj", "FS-LSTM projection width"),
    (
        "fastslow_layers",
        "hidden layers of the fast/slow perceptron",
    ),
    ("fastslow_width", "neurons per perceptron layer"),
    ("clip_norm", "global gradient-norm clip"),
    (
        "allow_wide_projection",
        "accept a projection above the size bound",
    ),
    (
        "seed",
        "seed for initialisation, shuffling and synthetic data",
    ),
    (
        "deterministic",
        "fixed-order reductions (always on; recorded for audit)",
    ),
    ("threads", "worker threads, 0 for all cores"),
    (
        "synthetic_alpha",
        "fast-flow coefficient of generated catchments",
    ),
    ("synthetic_beta", "slow-flow coefficient"),
    ("synthetic_gamma", "constant flow, mm/day"),
    (
        "synthetic_noise_sd",
        "streamflow noise standard deviation, mm/day",
    ),
    ("synthetic_days", "days per generated record"),
    ("synthetic_gauges", "number of generated gauges"),
];

/// Resolved settings of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub data_dir: PathBuf,
    pub attributes: Option<PathBuf>,
    pub gauges: Vec<String>,
    pub output_dir: PathBuf,
    pub checkpoint: Option<PathBuf>,
    pub bbox: BoundingBox,
    pub min_years: f64,
    pub splits: SplitSpec,
    pub train: TrainConfig,
    pub deterministic: bool,
    pub threads: usize,
    pub synthetic: SyntheticSpec,
    pub synthetic_gauges: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        Self {
            data_dir: "data".into(),
            attributes: None,
            gauges: Vec::new(),
            output_dir: "out".into(),
            checkpoint: None,
            bbox: BoundingBox::southeast_brazil(),
            min_years: 10.0,
            splits: SplitSpec::default(),
            synthetic: SyntheticSpec::new(0.5, 0.3, 0.1, 0.05, 5000, train.seed),
            train,
            deterministic: false,
            threads: 0,
            synthetic_gauges: 1,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| CliError::Config(format!("`{key}`: cannot parse `{value}`: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(CliError::Config(format!(
            "`{key}`: expected true or false, got `{value}`"
        ))),
    }
}

fn parse_date(key: &str, value: &str) -> Result<NaiveDate, CliError> {
    NaiveDate::parse_from_str(value, "%Y-%m-%d")
        .map_err(|e| CliError::Config(format!("`{key}`: `{value}` is not a YYYY-MM-DD date: {e}")))
}

fn optional_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| value.into())
}

impl RunConfig {
    /// Reads `path` over the defaults.
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::default();
        config.apply_text(&text)?;
        Ok(config)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        let mut seen = BTreeSet::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("line {}: expected `key = value`", n + 1))
            })?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(CliError::Config(format!(
                    "line {}: `{key}` set twice",
                    n + 1
                )));
            }
            self.set(key, value.trim())
                .map_err(|e| CliError::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let t = &mut self.train;
        let s = &mut self.synthetic;
        let ranges = &mut self.splits;
        match key {
            "data_dir" => self.data_dir = value.into(),
            "attributes" => self.attributes = optional_path(value),
            "gauges" => {
                self.gauges = value
                    .split(',')
                    .map(str::trim)
                    .filter(|g| !g.is_empty())
                    .map(String::from)
                    .collect()
            }
            "output_dir" => self.output_dir = value.into(),
            "checkpoint" => self.checkpoint = optional_path(value),
            "bbox_west" => self.bbox.west = parse(key, value)?,
            "bbox_east" => self.bbox.east = parse(key, value)?,
            "bbox_south" => self.bbox.south = parse(key, value)?,
            "bbox_north" => self.bbox.north = parse(key, value)?,
            "min_years" => self.min_years = parse(key, value)?,
            "train_start" => ranges.train.start = parse_date(key, value)?,
            "train_end" => ranges.train.end = parse_date(key, value)?,
            "valid_start" => ranges.validation.start = parse_date(key, value)?,
            "valid_end" => ranges.validation.end = parse_date(key, value)?,
            "test_start" => ranges.test.start = parse_date(key, value)?,
            "test_end" => ranges.test.end = parse_date(key, value)?,
            "model" => t.model = parse(key, value)?,
            "cells" => t.cells = parse(key, value)?,
            "epochs" => t.epochs = parse(key, value)?,
            "batch" => t.batch = parse(key, value)?,
            "window" => t.window = parse(key, value)?,
            "learning_rate" => t.learning_rate = parse(key, value)?,
            "loss" => t.loss = parse(key, value)?,
            "proj" => t.proj = parse(key, value)?,
            "fastslow_layers" => t.fastslow_layers = parse(key, value)?,
            "fastslow_width" => t.fastslow_width = parse(key, value)?,
            "clip_norm" => t.clip_norm = parse(key, value)?,
            "allow_wide_projection" => t.allow_wide_projection = parse_bool(key, value)?,
            "seed" => {
                t.seed = parse(key, value)?;
                s.seed = t.seed;
            }
            "deterministic" => self.deterministic = parse_bool(key, value)?,
            "threads" => self.threads = parse(key, value)?,
            "synthetic_alpha" => s.alpha = parse(key, value)?,
            "synthetic_beta" => s.beta = parse(key, value)?,
            "synthetic_gamma" => s.gamma = parse(key, value)?,
            "synthetic_noise_sd" => s.noise_sd = parse(key, value)?,
            "synthetic_days" => s.days = parse(key, value)?,
            "synthetic_gauges" => self.synthetic_gauges = parse(key, value)?,
            other => return Err(CliError::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Checks cross-field constraints and returns warnings.
    pub fn validate(&self) -> Result<Vec<String>, CliError> {
        for range in [self.splits.train, self.splits.validation, self.splits.test] {
            DateRange::new(range.start, range.end)?;
        }
        self.splits.validate()?;
        if !(self.min_years.is_finite() && self.min_years >= 0.0) {
            return Err(CliError::Config(format!(
                "`min_years` must be a nonnegative number, got {}",
                self.min_years
            )));
        }
        if self.synthetic_gauges == 0 {
            return Err(CliError::Config(
                "`synthetic_gauges` must be positive".into(),
            ));
        }
        Ok(self.train.validate()?)
    }

    pub fn attributes_path(&self) -> PathBuf {
        self.attributes
            .clone()
            .unwrap_or_else(|| self.data_dir.join("attributes.csv"))
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.checkpoint
            .clone()
            .unwrap_or_else(|| self.output_dir.join("checkpoint.json"))
    }

    /// Every key with its effective value, one per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (key, _) in KEYS {
            let _ = writeln!(out, "{key} = {}", self.value_of(key));
        }
        out
    }

    fn value_of(&self, key: &str) -> String {
        let t = &self.train;
        let s = &self.synthetic;
        let r = &self.splits;
        match key {
            "data_dir" => self.data_dir.display().to_string(),
            "attributes" => self.attributes_path().display().to_string(),
            "gauges" => self.gauges.join(","),
            "output_dir" => self.output_dir.display().to_string(),
            "checkpoint" => self.checkpoint_path().display().to_string(),
            "bbox_west" => self.bbox.west.to_string(),
            "bbox_east" => self.bbox.east.to_string(),
            "bbox_south" => self.bbox.south.to_string(),
            "bbox_north" => self.bbox.north.to_string(),
            "min_years" => self.min_years.to_string(),
            "train_start" => r.train.start.to_string(),
            "train_end" => r.train.end.to_string(),
            "valid_start" => r.validation.start.to_string(),
            "valid_end" => r.validation.end.to_string(),
            "test_start" => r.test.start.to_string(),
            "test_end" => r.test.end.to_string(),
            "model" => t.model.to_string(),
            "cells" => t.cells.to_string(),
            "epochs" => t.epochs.to_string(),
            "batch" => t.batch.to_string(),
            "window" => t.window.to_string(),
            "learning_rate" => t.learning_rate.to_string(),
            "loss" => t.loss.name().to_string(),
            "proj" => t.proj.to_string(),
            "fastslow_layers" => t.fastslow_layers.to_string(),
            "fastslow_width" => t.fastslow_width.to_string(),
            "clip_norm" => t.clip_norm.to_string(),
            "allow_wide_projection" => t.allow_wide_projection.to_string(),
            "seed" => t.seed.to_string(),
            "deterministic" => self.deterministic.to_string(),
            "threads" => self.threads.to_string(),
            "synthetic_alpha" => s.alpha.to_string(),
            "synthetic_beta" => s.beta.to_string(),
            "synthetic_gamma" => s.gamma.to_string(),
            "synthetic_noise_sd" => s.noise_sd.to_string(),
            "synthetic_days" => s.days.to_string(),
            "synthetic_gauges" => self.synthetic_gauges.to_string(),
            _ => unreachable!("every listed key has a value"),
        }
    }

    /// Writes the resolved configuration as `<command>.conf` in the output
    /// directory.
    pub fn archive(&self, command: &str) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(&self.output_dir).map_err(|e| CliError::io(&self.output_dir, e))?;
        let path = self.output_dir.join(format!("{command}.conf"));
        std::fs::write(&path, self.to_text()).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

impl FromStr for RunConfig {
    type Err = CliError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut config = Self::default();
        config.apply_text(text)?;
        Ok(config)
    }
}
