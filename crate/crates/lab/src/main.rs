use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use cxlab::LabError;
use lab::config::{ExperimentConfig, Kind};

#[derive(Parser, Debug)]
#[command(name = "lab", version, about = "Run a verification experiment")]
struct Cli {
    kind: Kind,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Matrix size for `acs`.
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Trial count for `acs`.
    #[arg(long)]
    trials: Option<usize>,
}

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn config_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("config error: {msg}");
    ExitCode::from(EXIT_CONFIG)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut config = match &cli.config {
        Some(path) => match ExperimentConfig::load(path) {
            Ok(c) => c,
            Err(e) => return config_error(e),
        },
        None => ExperimentConfig::default(),
    };
    if let Some(k) = config.kind {
        if k != cli.kind {
            return config_error(format!("kind: file says {k}, command line says {}", cli.kind));
        }
    }
    config.kind = Some(cli.kind);
    if let Some(w) = cli.workers {
        config.workers = w;
    }
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(s) = cli.size {
        config.acs.size = s;
    }
    if let Some(t) = cli.trials {
        config.acs.trials = t;
    }
    let mut seed_source = "config";
    if let Ok(s) = std::env::var("LAB_SEED") {
        match s.parse() {
            Ok(v) => {
                config.seed = v;
                seed_source = "LAB_SEED";
            }
            Err(_) => return config_error(format!("LAB_SEED: not an unsigned integer: {s:?}")),
        }
    }
    let violations = config.validate();
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("config error: {v}");
        }
        return ExitCode::from(EXIT_CONFIG);
    }
    let out = cli
        .out
        .or_else(|| config.out.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out").join(cli.kind.name()));

    let report = match lab::run::run(cli.kind, &config, seed_source) {
        Ok(r) => r,
        Err(
            e @ (LabError::BudgetExceeded { .. }
            | LabError::UnderResolved { .. }
            | LabError::InvalidArgument(_)
            | LabError::RadiusTooLarge { .. }
            | LabError::DimensionMismatch { .. }),
        ) => return config_error(e),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_FAIL);
        }
    };
    if let Err(e) = report.write(&out) {
        eprintln!("error: writing {}: {e}", out.display());
        return ExitCode::from(EXIT_FAIL);
    }
    for c in &report.checks {
        println!(
            "{} {}: value {} limit {}{}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            lab::report::fmt_f64(c.value),
            lab::report::fmt_f64(c.limit),
            if c.detail.is_empty() {
                String::new()
            } else {
                format!(" ({})", c.detail)
            }
        );
    }
    println!("report: {}", out.join("report.json").display());
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}
