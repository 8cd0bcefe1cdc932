//! Command-line driver: instance reports, random instance generation and the
//! verification suites.

pub mod commands;
pub mod suites;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use commands::{GenKind, GenOptions, RhoSelector};
use revquant_core::io::{parse_instance, parse_labeled_ensemble, to_pretty_json};
use suites::{run_suite, Suite, SuiteConfig, SuiteOutcome};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "REVQUANT_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "revquant", version, about = "Near-optimal reversal of quantum channels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the near-optimal reversal for a channel instance and report fidelities.
    Reverse(ReverseArgs),
    /// Pretty good measurement report for a labeled ensemble.
    Pgm(PgmArgs),
    /// Run a verification suite; writes one CSV row per trial and a JSON summary.
    #[command(after_help = suite_help())]
    Suite(SuiteArgs),
    /// Write a seeded random instance as JSON.
    Gen(GenArgs),
}

#[derive(Debug, Args)]
pub struct ReverseArgs {
    /// Instance file: {"channel": ..., "rho"?: ..., "ensemble"?: ...}.
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value_t = RhoSelector::Instance)]
    pub rho: RhoSelector,
    /// Output file (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PgmArgs {
    /// Labeled ensemble file: {"members": [...], "labels": "computational"}.
    pub instance: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SuiteArgs {
    pub suite: Suite,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated dimensions, cycled over trials (suite default when absent).
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    /// Uniform multiplier on every suite tolerance.
    #[arg(long, default_value_t = 1.0)]
    pub tol: f64,
    /// Optimizer iterations per start.
    #[arg(long, default_value_t = 40)]
    pub budget: usize,
    /// Random optimizer starts per run.
    #[arg(long, default_value_t = 1)]
    pub restarts: usize,
    /// Output directory for <suite>.csv and <suite>.json (CSV to stdout, summary to stderr when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value_t = GenKind::Channel)]
    pub kind: GenKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Dimension; only the first entry is used.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub dims: Vec<usize>,
    #[arg(long, default_value_t = 2)]
    pub members: usize,
    #[arg(long)]
    pub kraus_rank: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn suite_help() -> String {
    let mut s = String::from("Suites and CSV columns (reals printed with 17 significant digits):\n");
    for suite in Suite::ALL {
        s.push_str(&format!(
            "  {}: {}\n    {}\n",
            suite.name(),
            suite.description(),
            suite.columns().join(",")
        ));
    }
    s.push_str(&format!("\n{THREADS_ENV} caps the number of worker threads."));
    s
}

/// Error carrying the process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    fn failed(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_FAILURE,
            message: message.into(),
        }
    }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text)
            .map_err(|e| Failure::input(format!("cannot write {}: {e}", p.display()))),
        None => {
            // a closed pipe downstream is not an error
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            Ok(())
        }
    }
}

/// Sets the global thread pool size from [`THREADS_ENV`], if present.
pub fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::input(format!("{THREADS_ENV} must be a positive integer, got \"{value}\"")))?;
    // a second initialization in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn summary_json(outcome: &SuiteOutcome) -> serde_json::Value {
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let cfg = &outcome.config;
    json!({
        "suite": outcome.suite.name(),
        "trials": outcome.rows.len(),
        "passed": outcome.passed(),
        "failed": outcome.failed(),
        "all_pass": outcome.all_pass(),
        "no_trials": outcome.rows.is_empty(),
        "worst_margin": outcome.worst_margin(),
        "worst_trial": outcome.worst_trial().map(|r| r.trial),
        "seed": cfg.seed,
        "dims": cfg.dims,
        "tol_scale": cfg.tol_scale,
        "budget": cfg.budget,
        "restarts": cfg.restarts,
        "metadata": {
            "timestamp_unix": timestamp,
            "version": env!("CARGO_PKG_VERSION"),
            "threads": rayon::current_num_threads(),
        },
    })
}

fn run_reverse(args: &ReverseArgs) -> Result<(), Failure> {
    let text = read_input(&args.instance)?;
    let instance = parse_instance(&text)
        .map_err(|e| Failure::input(format!("{}: {e}", args.instance.display())))?;
    let report = commands::reverse(&instance, args.rho)
        .map_err(|e| Failure::failed(format!("invariant violated: {e}")))?;
    write_output(args.out.as_deref(), &to_pretty_json(&report))
}

fn run_pgm(args: &PgmArgs) -> Result<(), Failure> {
    let text = read_input(&args.instance)?;
    let ensemble = parse_labeled_ensemble(&text)
        .map_err(|e| Failure::input(format!("{}: {e}", args.instance.display())))?;
    let report = commands::pgm(&ensemble).map_err(|e| Failure::failed(format!("invariant violated: {e}")))?;
    write_output(args.out.as_deref(), &to_pretty_json(&report))
}

fn run_suite_command(args: &SuiteArgs) -> Result<(), Failure> {
    let mut config = SuiteConfig::new(args.suite, args.trials, args.seed);
    if let Some(d) = &args.dims {
        config.dims = d.clone();
    }
    config.tol_scale = args.tol;
    config.budget = args.budget;
    config.restarts = args.restarts;
    if config.budget == 0 {
        return Err(Failure::input("--budget must be at least 1"));
    }
    let outcome = run_suite(args.suite, &config).map_err(|e| match e {
        revquant_core::Error::InvalidArgument(m) => Failure::input(m),
        other => Failure::failed(format!("suite aborted: {other}")),
    })?;
    let csv = outcome.to_csv();
    let summary = serde_json::to_string_pretty(&summary_json(&outcome)).expect("json value");
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir)
                .map_err(|e| Failure::input(format!("cannot create {}: {e}", dir.display())))?;
            let name = args.suite.name();
            write_output(Some(&dir.join(format!("{name}.csv"))), &csv)?;
            write_output(Some(&dir.join(format!("{name}.json"))), &summary)?;
        }
        None => {
            let _ = write!(std::io::stdout().lock(), "{csv}");
            let _ = writeln!(std::io::stderr().lock(), "{summary}");
        }
    }
    if outcome.all_pass() {
        Ok(())
    } else {
        Err(Failure::failed(format!(
            "{}: {} of {} trials failed",
            args.suite,
            outcome.failed(),
            outcome.rows.len()
        )))
    }
}

fn run_gen(args: &GenArgs) -> Result<(), Failure> {
    let dim = *args.dims.first().ok_or_else(|| Failure::input("--dims is empty"))?;
    let doc = commands::generate(&GenOptions {
        kind: args.kind,
        dim,
        seed: args.seed,
        members: args.members,
        kraus_rank: args.kraus_rank,
    })
    .map_err(|e| Failure::input(e.to_string()))?;
    write_output(args.out.as_deref(), &to_pretty_json(&doc))
}

/// Executes a parsed command line.
pub fn run(cli: &Cli) -> Result<(), Failure> {
    configure_threads()?;
    match &cli.command {
        Command::Reverse(a) => run_reverse(a),
        Command::Pgm(a) => run_pgm(a),
        Command::Suite(a) => run_suite_command(a),
        Command::Gen(a) => run_gen(a),
    }
}
