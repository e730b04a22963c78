#![allow(dead_code)]

use std::path::Path;

use fslstm::RunConfig;

/// Small synthetic run: three years of data, a 40-day window and a tiny
/// FS-LSTM, laid out under `root`.
pub fn small_config(root: &Path) -> RunConfig {
    let text = format!(
        "data_dir = {data}
output_dir = {out}
min_years = 2
valid_start = 1990-10-01
valid_end = 1991-03-31
test_start = 1991-04-01
test_end = 1991-09-30
train_start = 1991-10-01
train_end = 1993-09-30
cells = 4
proj = 3
fastslow_width = 4
window = 40
batch = 32
epochs = 2
learning_rate = 0.01
seed = 3
synthetic_days = 1100
synthetic_gauges = 2
",
        data = root.join("data").display(),
        out = root.join("out").display(),
    );
    text.parse().expect("fixture config parses")
}

pub fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn first_line(path: &Path) -> String {
    read(path).lines().next().unwrap_or_default().to_string()
}
