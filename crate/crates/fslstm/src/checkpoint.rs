//! JSON checkpoint files.
//!
//! Floats are written in shortest round-trip form and parsed exactly, so a
//! reloaded checkpoint is bit-identical to the saved one.

use std::io::{Read, Write};
use std::path::Path;

use fslstm_core::train::Checkpoint;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const FORMAT: &str = "fslstm-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    format: String,
    version: u32,
    checkpoint: T,
}

pub fn write_checkpoint<W: Write>(
    path: &Path,
    out: W,
    checkpoint: &Checkpoint,
) -> Result<(), CliError> {
    let envelope = Envelope {
        format: FORMAT.into(),
        version: VERSION,
        checkpoint,
    };
    serde_json::to_writer(out, &envelope).map_err(|e| CliError::io(path, e))
}

pub fn read_checkpoint<R: Read>(path: &Path, input: R) -> Result<Checkpoint, CliError> {
    let envelope: Envelope<Checkpoint> = serde_json::from_reader(std::io::BufReader::new(input))
        .map_err(|e| {
            CliError::Data(format!(
                "{}: not a readable checkpoint: {e}",
                path.display()
            ))
        })?;
    if envelope.format != FORMAT || envelope.version != VERSION {
        return Err(CliError::Data(format!(
            "{}: unsupported checkpoint format {} v{}",
            path.display(),
            envelope.format,
            envelope.version
        )));
    }
    let ck = envelope.checkpoint;
    ck.model()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    ck.stats
        .validate()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(ck)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::Data(format!("checkpoint {}: {e}", path.display())))?;
    read_checkpoint(path, file)
}
