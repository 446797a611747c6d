//! Experiment runner around `evl-core`: JSON configs with flag overrides,
//! CSV/TSV outputs and a provenance record per run.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod suite;

use std::time::Instant;

pub use config::{ExperimentConfig, ExperimentKind, ZetaInput};
pub use error::CliError;
pub use experiments::{run, Outcome, Table};

/// Runs one experiment and writes its files into `cfg.out`.
pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let outcome = run(cfg)?;
    output::write_outcome(&cfg.out, &outcome, cfg, start.elapsed().as_secs_f64())?;
    Ok(outcome)
}
