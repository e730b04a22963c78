use fslstm::config::KEYS;
use fslstm::{CliError, RunConfig};
use fslstm_core::cells::ModelKind;
use fslstm_core::train::{LossKind, TrainConfig};

#[test]
fn defaults_follow_the_table_settings() {
    let c = RunConfig::default();
    assert_eq!(c.train, TrainConfig::default());
    assert_eq!(
        (c.train.cells, c.train.epochs, c.train.batch, c.train.window),
        (64, 30, 256, 365)
    );
    assert_eq!(c.train.proj, 10);
    assert_eq!(c.min_years, 10.0);
}

#[test]
fn file_values_override_defaults() {
    let c: RunConfig = "# comment\nmodel = mclstm\n\nloss = nse_basin\nepochs=3\ngauges = a, b\n"
        .parse()
        .unwrap();
    assert_eq!(c.train.model, ModelKind::McLstm);
    assert_eq!(c.train.loss, LossKind::NseBasin);
    assert_eq!(c.train.epochs, 3);
    assert_eq!(c.gauges, ["a", "b"]);
}

#[test]
fn later_sets_override_the_file() {
    let mut c: RunConfig = "seed = 4\nmodel = lstm".parse().unwrap();
    c.set("seed", "9").unwrap();
    assert_eq!(c.train.seed, 9);
    assert_eq!(c.synthetic.seed, 9);
    assert_eq!(c.train.model, ModelKind::Lstm);
}

#[test]
fn unknown_and_repeated_keys_are_rejected() {
    let err = "celss = 4".parse::<RunConfig>().unwrap_err();
    assert!(err.to_string().contains("unknown key `celss`"), "{err}");
    assert_eq!(err.exit_code(), CliError::CONFIG);
    let err = "cells = 4\ncells = 5".parse::<RunConfig>().unwrap_err();
    assert!(err.to_string().contains("line 2"), "{err}");
    let err = "cells 4".parse::<RunConfig>().unwrap_err();
    assert!(err.to_string().contains("key = value"), "{err}");
}

#[test]
fn bad_values_are_config_errors() {
    for text in [
        "cells = -1",
        "model = gru",
        "train_start = 1999/10/01",
        "deterministic = maybe",
    ] {
        let err = text.parse::<RunConfig>().unwrap_err();
        assert_eq!(err.exit_code(), CliError::CONFIG, "{text}: {err}");
    }
}

#[test]
fn resolved_text_lists_every_key_and_reparses_identically() {
    let c: RunConfig = "model = mclstm\nlearning_rate = 0.003\ngauges = x,y\nbbox_west = -55.25"
        .parse()
        .unwrap();
    let text = c.to_text();
    assert_eq!(text.lines().count(), KEYS.len());
    let back: RunConfig = text.parse().unwrap();
    assert_eq!(back.to_text(), text);
    assert_eq!(back.train, c.train);
    assert_eq!(back.splits, c.splits);
    assert_eq!(back.bbox, c.bbox);
}

#[test]
fn overlapping_splits_fail_validation() {
    let c: RunConfig = "test_start = 2000-01-01\ntest_end = 2001-01-01"
        .parse()
        .unwrap();
    assert_eq!(c.validate().unwrap_err().exit_code(), CliError::CONFIG);
}

#[test]
fn wide_projection_is_refused_with_the_bound() {
    let c: RunConfig = "proj = 25".parse().unwrap();
    let err = c.validate().unwrap_err();
    assert_eq!(err.exit_code(), CliError::CONFIG);
    assert!(err.to_string().contains("(19)"), "{err}");
    let c: RunConfig = "proj = 25\nallow_wide_projection = true".parse().unwrap();
    assert!(!c.validate().unwrap().is_empty());
}
