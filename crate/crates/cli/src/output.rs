use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::experiments::{num, Outcome};

pub const RESULTS_FILE: &str = "results.csv";
pub const PLOT_FILE: &str = "plotdata.tsv";
pub const PROVENANCE_FILE: &str = "provenance.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub seed: u64,
    pub wall_time_seconds: f64,
    pub config: ExperimentConfig,
}

fn create(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::File::create(path)
        .and_then(|mut f| f.write_all(bytes))
        .map_err(|e| CliError::io(path, e))
}

/// Writes results.csv, plotdata.tsv (when present) and provenance.json.
pub fn write_outcome(dir: &Path, outcome: &Outcome, cfg: &ExperimentConfig, wall: f64) -> Result<(), CliError> {
    create(dir)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&outcome.table.header)?;
    for row in &outcome.table.rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::io(dir, e.into_error()))?;
    write_file(&dir.join(RESULTS_FILE), &bytes)?;
    if let Some(plot) = &outcome.plot {
        let mut text = String::from("t\tF_empirical\tF_theory\n");
        for (t, emp, th) in plot {
            text.push_str(&format!("{}\t{}\t{}\n", num(*t), num(*emp), num(*th)));
        }
        write_file(&dir.join(PLOT_FILE), text.as_bytes())?;
    }
    let prov = Provenance {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        wall_time_seconds: wall,
        config: cfg.clone(),
    };
    let json = serde_json::to_string_pretty(&prov).expect("config serializes");
    write_file(&dir.join(PROVENANCE_FILE), json.as_bytes())
}

/// One machine-readable row describing a failure.
pub fn error_csv(err: &CliError) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let message = err.to_string();
    w.write_record(["status", "error_kind", "key", "message"]).unwrap();
    w.write_record(["error", err.kind(), err.key(), message.as_str()])
        .unwrap();
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

pub fn write_error(dir: &Path, err: &CliError) -> Result<(), CliError> {
    create(dir)?;
    write_file(&dir.join(RESULTS_FILE), error_csv(err).as_bytes())
}
