//! Trains FS-LSTM on a synthetic fast/slow catchment and scores the test
//! period.
//!
//! `EPOCHS`, `LR`, `BATCH`, `CELLS` and `DAYS` override the defaults.

use std::time::Instant;

use fslstm_core::data::Split;
use fslstm_core::data::{generate_synthetic, SplitSpec, SyntheticSpec};
use fslstm_core::metrics::{fdc, score_report, PairedSeries};
use fslstm_core::train::{evaluate, train_with, Dataset, ModelPredictor, TrainConfig};

fn env<T: std::str::FromStr>(key: &str, default: T) -> T {
    std::env::var(key)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(default)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let days = env("DAYS", 5000);
    let record = generate_synthetic(&SyntheticSpec::new(0.5, 0.3, 0.1, 0.05, days, 7))?;
    let config = TrainConfig {
        epochs: env("EPOCHS", 10),
        learning_rate: env("LR", 0.02),
        batch: env("BATCH", 256),
        cells: env("CELLS", 64),
        seed: 7,
        ..TrainConfig::default()
    };
    let data = Dataset::prepare(&[record], &SplitSpec::default(), config.window)?;
    for split in Split::ALL {
        println!("{split}: {} samples", data.pool(split).len());
    }
    let start = Instant::now();
    let mut last = Instant::now();
    let report = train_with(&data, &config, &mut |log| {
        println!(
            "epoch {} train {:.5} valid {:?} {:.1}s",
            log.epoch,
            log.train_loss,
            log.valid_loss,
            last.elapsed().as_secs_f64()
        );
        last = Instant::now();
    })?;
    println!(
        "initial {:.5} final {:.5} best epoch {} after {:.1}s",
        report.initial_loss,
        report.final_train_loss,
        report.checkpoint.epoch,
        start.elapsed().as_secs_f64()
    );
    let predictor = ModelPredictor::new(&report.checkpoint)?;
    for g in evaluate(&predictor, data.gauges(), Split::Test)? {
        let s = score_report(&g.gauge_id, &PairedSeries::new(&g.observed, &g.predicted)?);
        println!("{s:?}");
        let (obs, sim) = (fdc(&g.observed)?, fdc(&g.predicted)?);
        for q in [0.01, 0.2, 0.5, 0.7, 0.99] {
            println!(
                "Q{q}: observed {:.4} predicted {:.4}",
                obs.quantile(q),
                sim.quantile(q)
            );
        }
    }
    println!("total {:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}
