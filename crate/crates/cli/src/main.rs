use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use evl_lab::config::parse_process;
use evl_lab::error::from_json_error;
use evl_lab::{output, suite, CliError, ExperimentConfig, ExperimentKind, ZetaInput};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "evl-lab", version, about = "Extremal index and hitting-time experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the extremal index with all four estimators.
    EstimateEi(RunArgs),
    /// Hitting-time statistics against 1 − e^{−θt}.
    Hts(RunArgs),
    /// Return-time statistics, atom estimate and the integral relation.
    Rts(RunArgs),
    /// Clustering diagnostics: SP/MP tables, D' sums, D^p gap.
    Conditions(RunArgs),
    /// Cylinder extremal index at periodic and aperiodic points.
    Dichotomy(RunArgs),
    /// Period sequence, return structure and the brute-force lemma check.
    Symbolic(RunArgs),
    /// Level solver against the empirical exceedance count.
    TailCheck(RunArgs),
    /// Runs every bundled experiment into subdirectories of --out.
    ReproducePaper(SuiteArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config; flags below override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// e.g. `ar1:2`, `bernoulli:0.3`, `chebyshev`, `mma13`.
    #[arg(long)]
    process: Option<String>,
    /// A number, a periodic word like `01`, or `upper`, `champernowne:LEN`, `sqrt2:LEN`.
    #[arg(long, allow_hyphen_values = true)]
    zeta: Option<String>,
    #[arg(long, value_delimiter = ',')]
    tau: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<u64>>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    emit_plot_data: bool,
}

#[derive(Args)]
struct SuiteArgs {
    /// Override the trial count of every experiment.
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, default_value_t = suite::DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value = "evl-paper")]
    out: PathBuf,
}

fn build_config(kind: ExperimentKind, args: &RunArgs) -> Result<ExperimentConfig, CliError> {
    let mut value = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            serde_json::from_str::<Value>(&text).map_err(|e| from_json_error(&e))?
        }
        None => json!({}),
    };
    let map = value
        .as_object_mut()
        .ok_or_else(|| CliError::config("config", "top level must be a JSON object".into()))?;
    map.insert("experiment".into(), json!(kind));
    if let Some(p) = &args.process {
        map.insert("process".into(), serde_json::to_value(parse_process(p)?).unwrap());
    }
    if let Some(z) = &args.zeta {
        map.insert("zeta".into(), serde_json::to_value(ZetaInput::parse_flag(z)).unwrap());
    }
    if let Some(t) = &args.tau {
        map.insert("tau".into(), json!(t));
    }
    if let Some(n) = &args.n {
        map.insert("n".into(), json!(n));
    }
    if let Some(t) = args.trials {
        map.insert("trials".into(), json!(t));
    }
    if let Some(s) = args.seed {
        map.insert("seed".into(), json!(s));
    }
    if let Some(o) = &args.out {
        map.insert("out".into(), json!(o));
    }
    if args.emit_plot_data {
        map.insert("emit_plot_data".into(), json!(true));
    }
    serde_json::from_value(value).map_err(|e| from_json_error(&e))
}

fn report(err: &CliError, dir: Option<&Path>) {
    let line = json!({"status": "error", "error_kind": err.kind(), "key": err.key(), "message": err.to_string()});
    eprintln!("{line}");
    if let Some(dir) = dir {
        if let Err(e) = output::write_error(dir, err) {
            eprintln!(
                "{}",
                json!({"status": "error", "error_kind": "io", "message": e.to_string()})
            );
        }
    }
}

fn run_one(kind: ExperimentKind, args: &RunArgs) -> ExitCode {
    let cfg = match build_config(kind, args) {
        Ok(c) => c,
        Err(e) => {
            report(&e, args.out.as_deref());
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match evl_lab::execute(&cfg) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            report(&e, Some(&cfg.out));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run_suite(args: &SuiteArgs) -> ExitCode {
    let start = Instant::now();
    let mut failed = Vec::new();
    let mut names = Vec::new();
    for (name, cfg) in suite::paper_suite(&args.out, args.seed, args.trials) {
        eprintln!("running {name}");
        if let Err(e) = evl_lab::execute(&cfg) {
            report(&e, Some(&cfg.out));
            failed.push(name.clone());
        }
        names.push(name);
    }
    let summary = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "seed": args.seed,
        "trials": args.trials.unwrap_or(suite::SUITE_TRIALS),
        "experiments": names,
        "failed": failed,
        "wall_time_seconds": start.elapsed().as_secs_f64(),
    });
    let path = args.out.join(output::PROVENANCE_FILE);
    if let Err(e) = std::fs::write(&path, serde_json::to_string_pretty(&summary).unwrap()) {
        report(&CliError::io(&path, e), None);
        return ExitCode::from(1);
    }
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::EstimateEi(a) => run_one(ExperimentKind::EstimateEi, a),
        Command::Hts(a) => run_one(ExperimentKind::Hts, a),
        Command::Rts(a) => run_one(ExperimentKind::Rts, a),
        Command::Conditions(a) => run_one(ExperimentKind::Conditions, a),
        Command::Dichotomy(a) => run_one(ExperimentKind::Dichotomy, a),
        Command::Symbolic(a) => run_one(ExperimentKind::Symbolic, a),
        Command::TailCheck(a) => run_one(ExperimentKind::TailCheck, a),
        Command::ReproducePaper(a) => run_suite(a),
    }
}
