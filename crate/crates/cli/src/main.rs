//! `infocap`: run declarative scenarios, capacity sweeps and the
//! acceptance battery.
//!
//! Exit status: 0 when every check passes, 1 on a numerical failure,
//! 2 on an invalid configuration.

mod config;
mod report;
mod scenario;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use config::{ScenarioConfig, SweepScenario};
use report::{check_line, write_checks_csv, write_outputs, write_table, RunReport};
use scenario::{Outcome, RunError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "infocap",
    version,
    about = "Fisher information and channel capacity scenarios"
)]
struct Cli {
    /// Directory for reports and tables; stdout when unset.
    #[arg(long, global = true, env = "INFOCAP_OUT_DIR")]
    out: Option<PathBuf>,
    /// Report format on stdout, or extra CSV tables in the output directory.
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario config.
    Run {
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Tabulate the capacity for N = 1..=n_max channels.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        n_max: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Validate a config and print it with defaults filled in.
    Check { config: PathBuf },
    /// Run the acceptance battery.
    Verify {
        /// Criterion id, tag or name fragment.
        #[arg(long)]
        filter: Option<String>,
    },
}

const EXIT_NUMERICAL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, seed } => load(config, *seed).and_then(|c| {
            let outcome = scenario::execute(&c, base_dir(config));
            finish(&cli, config, c, outcome)
        }),
        Command::Sweep {
            config,
            n_max,
            seed,
        } => load(config, *seed).and_then(|c| {
            let sweep = match sweep_base(&c) {
                Ok(s) => s,
                Err(e) => return Err(RunError::Config(e)),
            };
            let outcome = c
                .validate(base_dir(config))
                .map_err(RunError::from)
                .and_then(|_| scenario::sweep(&sweep, *n_max));
            finish(
                &cli,
                config,
                ScenarioConfig::Sweep(SweepScenario {
                    n_max: *n_max,
                    ..sweep
                }),
                outcome,
            )
        }),
        Command::Check { config } => load(config, None).and_then(|c| {
            c.validate(base_dir(config))?;
            print!("{}", c.to_toml());
            Ok(ExitCode::SUCCESS)
        }),
        Command::Verify { filter } => return verify(filter.as_deref()),
    };
    match result {
        Ok(code) => code,
        Err(RunError::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(RunError::Numerical(e)) => {
            eprintln!("numerical failure: {e}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}

fn base_dir(config: &Path) -> &Path {
    config.parent().unwrap_or(Path::new("."))
}

fn load(path: &Path, seed: Option<u64>) -> Result<ScenarioConfig, RunError> {
    let mut c = ScenarioConfig::load(path)?;
    if let Some(s) = seed {
        c.override_seed(s);
    }
    Ok(c)
}

/// A sweep runs from a sweep config or from the model of a fisher config.
fn sweep_base(c: &ScenarioConfig) -> Result<SweepScenario, config::ConfigError> {
    match c {
        ScenarioConfig::Sweep(s) => Ok(s.clone()),
        ScenarioConfig::Fisher(f) => Ok(SweepScenario {
            model: f.model.clone(),
            metric: f.metric.clone(),
            method: f.method,
            n_max: f.model.channels,
        }),
        other => Err(config::ConfigError(format!(
            "kind: a {} scenario has no channel model to sweep",
            other.kind()
        ))),
    }
}

fn finish(
    cli: &Cli,
    config_path: &Path,
    config: ScenarioConfig,
    outcome: Result<Outcome, RunError>,
) -> Result<ExitCode, RunError> {
    let outcome = outcome?;
    let report = RunReport::new(config, &outcome);
    for c in &report.checks {
        eprintln!("{}", check_line(c));
    }
    if let Err(e) = emit(cli, config_path, &report, &outcome) {
        eprintln!("could not write output: {e:#}");
        return Ok(ExitCode::from(EXIT_NUMERICAL));
    }
    if report.pass {
        Ok(ExitCode::SUCCESS)
    } else {
        let failed: Vec<&str> = report.failures().map(|c| c.label.as_str()).collect();
        eprintln!("failed checks: {}", failed.join(", "));
        Ok(ExitCode::from(EXIT_NUMERICAL))
    }
}

fn emit(
    cli: &Cli,
    config_path: &Path,
    report: &RunReport,
    outcome: &Outcome,
) -> anyhow::Result<()> {
    match &cli.out {
        Some(dir) => {
            let stem = config_path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("scenario");
            for p in write_outputs(dir, stem, report, outcome, cli.format == Format::Csv)? {
                eprintln!("wrote {}", p.display());
            }
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            match cli.format {
                Format::Json => lock.write_all(report.to_json().as_bytes())?,
                Format::Csv => match outcome.tables.iter().find(|t| t.name == "sweep") {
                    Some(t) => write_table(&mut lock, t)?,
                    None => write_checks_csv(&mut lock, &report.checks)?,
                },
            }
        }
    }
    Ok(())
}

fn verify(filter: Option<&str>) -> ExitCode {
    let summary = infocap::verify::run(filter);
    if summary.results.is_empty() {
        eprintln!("no criterion matches {:?}", filter.unwrap_or_default());
        return ExitCode::from(EXIT_CONFIG);
    }
    for r in &summary.results {
        println!("{}", r.line());
    }
    println!(
        "{} of {} criteria pass in {:.1} s",
        summary.results.iter().filter(|r| r.pass).count(),
        summary.results.len(),
        summary.elapsed_seconds
    );
    let failures = summary.failures();
    if failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        let ids: Vec<String> = failures.iter().map(|r| r.id.to_string()).collect();
        eprintln!("failed criteria: {}", ids.join(", "));
        ExitCode::from(EXIT_NUMERICAL)
    }
}
