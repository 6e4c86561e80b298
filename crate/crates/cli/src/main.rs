//! `crowdsim` — validate scenario files, execute single runs, and sweep
//! seed ranges from the command line.
//!
//! Exit codes: 0 success, 1 scenario or usage error, 2 runtime or I/O
//! error. All diagnostics go to standard error; results go to standard
//! output unless `--out` redirects them to a file. Output files are written
//! to a temporary sibling and renamed into place, so a failed invocation
//! never leaves a partial file behind.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crowdsim_core::engine;
use crowdsim_core::report::{emit_report, emit_reports, emit_trace, Report, ReportFormat};
use crowdsim_core::scenario::{parse_scenario, validate, Scenario, ScenarioError};

#[derive(Parser)]
#[command(
    name = "crowdsim",
    version,
    about = "Deterministic simulator of crowd work flowing into an organizational knowledge base"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a scenario file, reporting every problem found
    Validate(ScenarioArg),
    /// Execute one seeded run and write its report
    Run {
        #[command(flatten)]
        scenario: ScenarioArg,
        /// Seed for the run's draw stream
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report format (default: json)
        #[arg(long)]
        format: Option<ReportFormat>,
        /// Write the report here instead of standard output
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Also write the run's event log as CSV to this path
        #[arg(long, value_name = "PATH")]
        trace: Option<PathBuf>,
    },
    /// Execute one run per seed in a range and write the combined reports
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArg,
        /// Inclusive seed range, e.g. 1..100
        #[arg(long, value_name = "LO..HI")]
        seeds: SeedRange,
        /// Report format (default: csv)
        #[arg(long)]
        format: Option<ReportFormat>,
        /// Write the reports here instead of standard output
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Number of worker threads (results are merged in seed order, so
        /// output is identical for any degree)
        #[arg(long, default_value_t = 1, value_name = "N")]
        parallel: usize,
    },
}

#[derive(Args)]
struct ScenarioArg {
    /// Path to the scenario JSON file
    #[arg(value_name = "SCENARIO")]
    scenario_pos: Option<PathBuf>,
    /// Path to the scenario JSON file (alternative to the positional form)
    #[arg(long = "scenario", value_name = "PATH", conflicts_with = "scenario_pos")]
    scenario_flag: Option<PathBuf>,
}

impl ScenarioArg {
    fn path(&self) -> Result<&Path, CliError> {
        self.scenario_pos
            .as_deref()
            .or(self.scenario_flag.as_deref())
            .ok_or_else(|| {
                CliError::Usage("missing scenario path (positional or --scenario)".into())
            })
    }
}

/// Inclusive seed range `LO..HI`.
#[derive(Debug, Clone, Copy)]
struct SeedRange {
    lo: u64,
    hi: u64,
}

impl FromStr for SeedRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (lo, hi) = s
            .split_once("..")
            .ok_or_else(|| format!("expected LO..HI, got {s:?}"))?;
        let lo: u64 = lo
            .trim()
            .parse()
            .map_err(|e| format!("bad range start {lo:?}: {e}"))?;
        let hi: u64 = hi
            .trim()
            .parse()
            .map_err(|e| format!("bad range end {hi:?}: {e}"))?;
        if lo > hi {
            return Err(format!("empty seed range {lo}..{hi} (inclusive; needs LO <= HI)"));
        }
        Ok(SeedRange { lo, hi })
    }
}

enum CliError {
    /// Bad invocation or bad option value.
    Usage(String),
    /// The scenario file parsed or validated with problems.
    Scenario(Vec<ScenarioError>),
    /// Reading or writing failed.
    Io(String, std::io::Error),
    /// Anything else that prevents the run from completing.
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Scenario(_) => 1,
            CliError::Io(..) | CliError::Runtime(_) => 2,
        }
    }

    fn print(&self) {
        match self {
            CliError::Usage(message) => eprintln!("error: {message}"),
            CliError::Scenario(errors) => {
                for error in errors {
                    eprintln!("{error}");
                }
            }
            CliError::Io(context, source) => eprintln!("error: {context}: {source}"),
            CliError::Runtime(message) => eprintln!("error: {message}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            error.print();
            ExitCode::from(error.exit_code())
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate(scenario) => {
            load_scenario(scenario.path()?)?;
            println!("ok");
            Ok(())
        }
        Command::Run {
            scenario,
            seed,
            format,
            out,
            trace,
        } => {
            let scenario = load_scenario(scenario.path()?)?;
            let output = engine::run(&scenario, seed, trace.is_some())
                .map_err(CliError::Scenario)?;
            let text = emit_report(&output.report, format.unwrap_or(ReportFormat::Json));
            if let Some(events) = &output.trace {
                let mut bytes = Vec::new();
                emit_trace(events, &mut bytes)
                    .map_err(|e| CliError::Io("rendering trace".into(), e))?;
                let path = trace.as_deref().expect("trace collected only when requested");
                write_atomic(path, &bytes)?;
            }
            deliver(out.as_deref(), text.as_bytes())
        }
        Command::Sweep {
            scenario,
            seeds,
            format,
            out,
            parallel,
        } => {
            if parallel == 0 {
                return Err(CliError::Usage("--parallel must be at least 1".into()));
            }
            let scenario = load_scenario(scenario.path()?)?;
            let reports = sweep(&scenario, seeds, parallel)?;
            let text = emit_reports(&reports, format.unwrap_or(ReportFormat::Csv));
            deliver(out.as_deref(), text.as_bytes())
        }
    }
}

fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("reading {}", path.display()), e))?;
    let scenario = parse_scenario(&text).map_err(CliError::Scenario)?;
    validate(&scenario).map_err(CliError::Scenario)?;
    Ok(scenario)
}

/// Run every seed in the range, in parallel when asked, and return reports
/// in ascending seed order regardless of completion order.
fn sweep(scenario: &Scenario, seeds: SeedRange, parallel: usize) -> Result<Vec<Report>, CliError> {
    let seeds: Vec<u64> = (seeds.lo..=seeds.hi).collect();
    let one = |seed: u64| {
        engine::run(scenario, seed, false)
            .expect("scenario validated before sweep")
            .report
    };
    if parallel == 1 {
        return Ok(seeds.into_iter().map(one).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel)
        .build()
        .map_err(|e| CliError::Runtime(format!("building worker pool: {e}")))?;
    Ok(pool.install(|| seeds.into_par_iter().map(one).collect()))
}

/// Send result bytes to the chosen sink: a file (written atomically) or
/// standard output.
fn deliver(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => write_atomic(path, bytes),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::Io("writing to standard output".into(), e)),
    }
}

/// Write via a temporary file in the destination directory plus rename, so
/// the destination is never left half-written.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let context = || format!("writing {}", path.display());
    let dir = match path.parent() {
        Some(parent) if !parent.as_os_str().is_empty() => parent,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| CliError::Io(context(), e))?;
    tmp.write_all(bytes).map_err(|e| CliError::Io(context(), e))?;
    tmp.persist(path)
        .map_err(|e| CliError::Io(context(), e.error))?;
    Ok(())
}
