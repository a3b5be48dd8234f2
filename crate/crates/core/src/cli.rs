//! The `cei` command line.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 invalid configuration or
//! arguments, 3 a hard verification check failed.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::verify::{run_verify, Fault, VerifyOptions};
use crate::benchmarks::{Benchmark, BenchmarkId};
use crate::error::{Error, Result};
use crate::experiment::{atomic_write, cmd_profit, cmd_run, ExperimentConfig, OUT_DIR_ENV};

pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "cei", version, about = "Bayesian optimization experiments with corrected expected improvement")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run every (acquisition, seed) pair and write traces plus a summary.
    Run(ExperimentArgs),
    /// Replay unstopped runs at each threshold and write a profit table.
    Profit(ExperimentArgs),
    /// Run the invariant suite and print a JSON report.
    Verify(VerifyArgs),
    /// List the built-in benchmark functions.
    ListBenchmarks,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; falls back to the config's `output_dir`, then `cei-out`.
    #[arg(long, env = OUT_DIR_ENV)]
    pub out: Option<PathBuf>,
    /// Comma-separated seeds overriding the config.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,
    /// For `run` a single stop threshold, for `profit` a comma-separated grid.
    #[arg(long, value_delimiter = ',')]
    pub kappa: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FaultArg {
    NegativeVariance,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Also write the report to `verify.json` here.
    #[arg(long, env = OUT_DIR_ENV)]
    pub out: Option<PathBuf>,
    /// The first value seeds the randomized checks.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Skip the probabilistic study.
    #[arg(long)]
    pub no_study: bool,
    /// Break an invariant on purpose to exercise the harness.
    #[arg(long, hide = true)]
    pub inject_fault: Option<FaultArg>,
}

/// Maps an error to the process exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

fn load(args: &ExperimentArgs) -> Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(s) = &args.seeds {
        cfg.seeds = s.clone();
    }
    cfg.validate()?;
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("cei-out"));
    Ok((cfg, out))
}

fn run(args: &ExperimentArgs) -> Result<i32> {
    let (mut cfg, out) = load(args)?;
    if let Some(k) = &args.kappa {
        match k.as_slice() {
            [v] => cfg.kappa = *v,
            _ => return Err(Error::config("--kappa: `run` takes a single threshold")),
        }
        cfg.validate()?;
    }
    let report = cmd_run(&cfg, &out, args.parallel)?;
    for p in &report.traces {
        println!("{}", p.display());
    }
    println!("{}", report.summary.display());
    Ok(0)
}

fn profit(args: &ExperimentArgs) -> Result<i32> {
    let (cfg, out) = load(args)?;
    let grid = args.kappa.clone().unwrap_or_else(|| cfg.kappa_grid.clone());
    let (path, rows) = cmd_profit(&cfg, &grid, &out, args.parallel)?;
    for r in &rows {
        eprintln!(
            "kappa {:<10} {:<13} profit {:>12.5} ± {:<10.5} t {:.1}",
            r.kappa, r.acquisition, r.mean_profit, r.std_err, r.mean_t_kappa
        );
    }
    println!("{}", path.display());
    Ok(0)
}

fn verify(args: &VerifyArgs) -> Result<i32> {
    let opts = VerifyOptions {
        seed: args.seeds.as_ref().and_then(|s| s.first().copied()).unwrap_or(0),
        fault: args.inject_fault.map(|FaultArg::NegativeVariance| Fault::NegativeVariance),
        study: !args.no_study,
        ..VerifyOptions::default()
    };
    let report = run_verify(&opts)?;
    for c in &report.checks {
        eprintln!(
            "{} {:<44} lhs {:>12.4e}  rhs {:>12.4e}{}",
            match (c.pass, c.hard) {
                (true, _) => "PASS",
                (false, true) => "FAIL",
                (false, false) => "WARN",
            },
            c.name,
            c.lhs,
            c.rhs,
            c.detail.as_ref().map(|d| format!("  ({d})")).unwrap_or_default()
        );
    }
    let json = serde_json::to_string_pretty(&report)?;
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)?;
        atomic_write(&dir.join("verify.json"), json.as_bytes())?;
    }
    println!("{json}");
    let failed: Vec<&str> = report.hard_failures().map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        Ok(0)
    } else {
        eprintln!("hard checks failed: {}", failed.join(", "));
        Ok(EXIT_VERIFY)
    }
}

fn list_benchmarks() -> Result<i32> {
    println!("{:<11} {:>3}  {:<18} {:>14}", "name", "dim", "box", "minimum");
    for id in BenchmarkId::ANALYTIC {
        let b = Benchmark::analytic(id)?;
        let (lo, hi) = b.bounds().ranges()[0];
        println!("{:<11} {:>3}  {:<18} {:>14.6}", id.name(), b.dim(), format!("[{lo}, {hi}]^{}", b.dim()), b.optimum_value());
    }
    println!("{:<11} {:>3}  {:<18} {:>14}", BenchmarkId::GpSampled.name(), 1, "[0, 40]", "per seed");
    Ok(0)
}

/// Parses `args` and runs the command, returning the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Run(a) => run(a),
        Command::Profit(a) => profit(a),
        Command::Verify(a) => verify(a),
        Command::ListBenchmarks => list_benchmarks(),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
