//! Batch experiments: configuration, single runs, frequency and phase
//! sweeps, amplitude calibration and file output.

mod config;
mod runs;

pub use config::{
    apply_override, uniform_phases, CalibrationSpec, ExperimentConfig, GaitSection, PhaseConvention, SweepAxes,
    CALIBRATED_FA_AMPLITUDE, REFERENCE_SPEED,
};
pub use runs::{
    calibrate_amplitude, run_frequency_grid, run_phase_sweep, run_trace, with_pool, Calibration, FrequencyGrid,
    PhaseSweep, TraceSummary,
};

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Creates `path` (and its parent directories) and hands a buffered writer
/// to `body`.
pub fn write_file(path: &Path, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    write_file(path, |w| writeln!(w, "{text}"))
}
