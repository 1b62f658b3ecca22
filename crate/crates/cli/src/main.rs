use std::path::PathBuf;
use std::process::ExitCode;

use cgolab_cli::fit::{fit_table, FitError};
use cgolab_cli::{run_scenario, RunError, ScenarioConfig};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "lab", version, about = "Run numerical scenarios and fit decay tables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config; exit 0 iff every criterion passes.
    Run {
        config: PathBuf,
        /// Output directory (default: the config's outputs.dir, else ./out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for independent grid jobs.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Log-log slope of one CSV column against another.
    Fit {
        table: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        /// Keep only rows with COLUMN=VALUE.
        #[arg(long, value_name = "COLUMN=VALUE")]
        filter: Option<String>,
    },
}

const EXIT_NUMERICAL: u8 = 1;
const EXIT_INPUT: u8 = 2;

fn run(config: PathBuf, out: Option<PathBuf>, seed: Option<u64>, jobs: usize) -> ExitCode {
    let mut cfg = match ScenarioConfig::load(&config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let dir = out
        .or_else(|| cfg.outputs.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let report = match run_scenario(&cfg, jobs) {
        Ok(r) => r,
        Err(e @ RunError::Config(_)) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_INPUT);
        }
        Err(e) => {
            eprintln!("error in {e}");
            return ExitCode::from(EXIT_NUMERICAL);
        }
    };
    if let Err(e) = report.write(&dir) {
        eprintln!("cannot write outputs to {}: {e}", dir.display());
        return ExitCode::from(EXIT_INPUT);
    }
    for c in &report.criteria {
        println!("{} {} = {:e} ({})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.threshold);
    }
    if report.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_NUMERICAL)
    }
}

fn fit(table: PathBuf, x: String, y: String, filter: Option<String>) -> ExitCode {
    let filter = match filter.as_deref().map(|f| f.split_once('=')) {
        None => None,
        Some(Some(kv)) => Some(kv),
        Some(None) => {
            eprintln!("--filter expects COLUMN=VALUE");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    match fit_table(&table, &x, &y, filter) {
        Ok(f) => {
            println!("{}", serde_json::to_string_pretty(&f).expect("fit serializes"));
            ExitCode::SUCCESS
        }
        Err(e @ FitError::Input(_)) => {
            eprintln!("{e}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, out, seed, jobs } => run(config, out, seed, jobs),
        Command::Fit { table, x, y, filter } => fit(table, x, y, filter),
    }
}
