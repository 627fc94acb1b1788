//! Configuration-driven experiments: parsing, presets, execution and CSV
//! output.
//!
//! Settings are resolved in three layers, later ones winning: the preset
//! named by the `preset` key, the configuration file, then command-line
//! overrides.

mod config;
pub mod presets;
mod run;

pub use config::{parse_entries, parse_override, Entry, ExperimentConfig, OutputSpec};
pub use run::{
    build_model, default_output_dir, ensemble_mean, feedback_toggle, histogram_at, predicted_density, run,
    simulate_config, write_outputs, HistogramTable, RunSummary, OUTPUT_DIR_ENV,
};

use crate::error::Error;

/// Process exit status for an error: 2 configuration, 3 numerical, 4 I/O.
pub fn exit_code(err: &Error) -> i32 {
    match err.root() {
        Error::Config { .. } | Error::InvalidParameter { .. } | Error::Dimension(_) | Error::NotLossless(_) => 2,
        Error::NonFinite { .. }
        | Error::NonPositiveProbability { .. }
        | Error::Truncation { .. }
        | Error::Trajectory { .. } => 3,
        Error::Io(_) => 4,
    }
}
