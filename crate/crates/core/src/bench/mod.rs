//! Monte Carlo sweeps over the number of measurements or outliers.

mod config;
mod metrics;
mod output;
mod sweep;

pub use config::{ConfigError, Scenario, SweepAxis, SweepConfig};
pub use metrics::{is_success, normalized_error};
pub use output::{format_sig12, write_csv, write_json, CSV_HEADER};
pub use sweep::{run_sweep, run_trial, ResultRow, TrialOutcome};
