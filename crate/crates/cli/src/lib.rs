//! Command-line surface over `coalesce-core`.
//!
//! [`execute`] parses arguments, runs one command and returns the text for
//! stdout together with the process exit code, so tests can drive the CLI
//! without spawning processes.

pub mod record;
mod render;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use coalesce_core::analysis::{fit_report_with, AnalysisError, Check, FitConfig};
use coalesce_core::chain::{ChainError, RangeChain, DEFAULT_EXACT_CEILING};
use coalesce_core::exact::{
    expected_time_to_constant, expected_visited_count, time_to_constant_pmf, visit_probabilities,
    ExactError, DEFAULT_EXACT_TAIL_TOL, DEFAULT_FLOAT_TAIL_TOL,
};
use coalesce_core::limitlaw::{cdf, charfn_closed, density, LimitError, LimitLawConfig};
use coalesce_core::montecarlo::{
    run_experiment, ExperimentConfig, SamplerKind, SimError, SimSummary, FULL_STORE_LIMIT,
};
use coalesce_core::{Arithmetic, Prob, SplitSpec};
use serde::Serialize;
use thiserror::Error;

use record::{
    CharfnRow, CompareConfig, ErrorBody, ErrorKind, ErrorRecord, ExactConfig, ExactPayload,
    LimitConfig, LimitPayload, LimitQuantity, OutputRecord, PmfRow, SeriesRow, SimulateConfig,
    ToProbValue, VisitRow, SCHEMA_VERSION,
};

/// Largest `n` for which `--arith auto` computes the law of `T` in exact
/// rationals; integer sizes grow like `n^2 log n` bits per step beyond it.
pub const AUTO_EXACT_MAX_N: usize = 20;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERDICT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CEILING: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "coalesce", version, about = "Coalescence time of iterated random functions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact law of T, E(T), E(N) and visit probabilities.
    Exact(ExactArgs),
    /// Monte Carlo summary of T/n, N and the split times.
    Simulate(SimulateArgs),
    /// Density, distribution function or characteristic function of the limit law.
    Limit(LimitArgs),
    /// Simulate and test the fit of T/n to the limit law.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ArithChoice {
    Auto,
    Exact,
    Float,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SamplerArg {
    Chain,
    Direct,
}

impl From<SamplerArg> for SamplerKind {
    fn from(arg: SamplerArg) -> Self {
        match arg {
            SamplerArg::Chain => SamplerKind::Chain,
            SamplerArg::Direct => SamplerKind::Direct,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckArg {
    Ks,
    Mean,
    En,
}

impl From<CheckArg> for Check {
    fn from(arg: CheckArg) -> Self {
        match arg {
            CheckArg::Ks => Check::Ks,
            CheckArg::Mean => Check::Mean,
            CheckArg::En => Check::En,
        }
    }
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[arg(long)]
    pub n: usize,
    /// Stop once the unenumerated mass drops below this.
    #[arg(long)]
    pub tail_tol: Option<f64>,
    #[arg(long, value_enum, default_value_t = ArithChoice::Auto)]
    pub arith: ArithChoice,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 10_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = SamplerArg::Chain)]
    pub sampler: SamplerArg,
    /// Split threshold; defaults to max(2, floor(ln ln n)).
    #[arg(long)]
    pub xi: Option<usize>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Write T/n for every trajectory, one per line, to this file.
    #[arg(long)]
    pub emit_samples: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct LimitArgs {
    #[arg(long, value_enum)]
    pub what: LimitQuantity,
    /// Evaluation points for density and cdf.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Vec<f64>,
    /// Evaluation points for charfn.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub t: Vec<f64>,
    /// Evenly spaced points as START:END:COUNT.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub simulation: SimulateArgs,
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    /// Series tolerance for the limit law.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Checks to run; defaults to ks and mean.
    #[arg(long = "check", value_enum, value_delimiter = ',')]
    pub checks: Vec<CheckArg>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Limit(#[from] LimitError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    fn kind(&self) -> ErrorKind {
        match self {
            CliError::Usage(_) => ErrorKind::Usage,
            CliError::Chain(ChainError::CeilingExceeded { .. })
            | CliError::Exact(ExactError::Chain(ChainError::CeilingExceeded { .. }))
            | CliError::Sim(SimError::Ceiling { .. }) => ErrorKind::Ceiling,
            _ => ErrorKind::Config,
        }
    }

    fn exit_code(&self) -> i32 {
        match self.kind() {
            ErrorKind::Ceiling => EXIT_CEILING,
            ErrorKind::Usage | ErrorKind::Config => EXIT_USAGE,
        }
    }
}

/// Text for stdout and the exit code of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub code: i32,
}

/// Parses `args` (including the program name) and runs the command.
pub fn execute<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            return match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    Outcome {
                        stdout: err.to_string(),
                        code: EXIT_OK,
                    }
                }
                _ => error_outcome(None, &CliError::Usage(err.to_string())),
            };
        }
    };
    let name = command_name(&cli.command);
    match run(&cli.command) {
        Ok(outcome) => outcome,
        Err(err) => error_outcome(Some(name), &err),
    }
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Exact(_) => "exact",
        Command::Simulate(_) => "simulate",
        Command::Limit(_) => "limit",
        Command::Compare(_) => "compare",
    }
}

fn error_outcome(command: Option<&str>, err: &CliError) -> Outcome {
    let record = ErrorRecord {
        schema_version: SCHEMA_VERSION.to_string(),
        command: command.map(str::to_string),
        error: ErrorBody {
            kind: err.kind(),
            message: err.to_string(),
        },
    };
    Outcome {
        stdout: to_json(&record),
        code: err.exit_code(),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("records serialize");
    text.push('\n');
    text
}

fn run(command: &Command) -> Result<Outcome, CliError> {
    match command {
        Command::Exact(args) => cmd_exact(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Limit(args) => cmd_limit(args),
        Command::Compare(args) => cmd_compare(args),
    }
}

fn ok(stdout: String) -> Outcome {
    Outcome {
        stdout,
        code: EXIT_OK,
    }
}

fn exact_payload<P: Prob + ToProbValue>(
    chain: &RangeChain,
    tail_tol: f64,
) -> Result<ExactPayload, CliError> {
    let pmf = time_to_constant_pmf::<P>(chain, tail_tol)?;
    let rows = pmf
        .masses()
        .iter()
        .enumerate()
        .map(|(i, p)| PmfRow {
            t: pmf.offset() + i as u64,
            p: p.to_value(),
        })
        .collect();
    let visits = visit_probabilities::<P>(chain)
        .iter()
        .enumerate()
        .skip(2)
        .map(|(m, p)| VisitRow { m, p: p.to_value() })
        .collect();
    Ok(ExactPayload {
        arithmetic: P::ARITHMETIC,
        pmf: rows,
        tail_mass: pmf.tail_mass().to_value(),
        expected_time: expected_time_to_constant::<P>(chain).to_value(),
        expected_visited: expected_visited_count::<P>(chain).to_value(),
        visit_probabilities: visits,
    })
}

pub fn cmd_exact(args: &ExactArgs) -> Result<Outcome, CliError> {
    let arithmetic = match args.arith {
        ArithChoice::Exact => Arithmetic::Exact,
        ArithChoice::Float => Arithmetic::Float,
        ArithChoice::Auto if args.n <= AUTO_EXACT_MAX_N => Arithmetic::Exact,
        ArithChoice::Auto => Arithmetic::Float,
    };
    let tail_tol = args.tail_tol.unwrap_or(match arithmetic {
        Arithmetic::Exact => DEFAULT_EXACT_TAIL_TOL,
        Arithmetic::Float => DEFAULT_FLOAT_TAIL_TOL,
    });
    let chain = RangeChain::build_with_ceiling(args.n, DEFAULT_EXACT_CEILING)?;
    let payload = match arithmetic {
        Arithmetic::Exact => exact_payload::<coalesce_core::Rational>(&chain, tail_tol)?,
        Arithmetic::Float => exact_payload::<f64>(&chain, tail_tol)?,
    };
    let config = ExactConfig {
        n: args.n,
        tail_tol,
        arithmetic,
    };
    let record = OutputRecord::new("exact", config, payload);
    Ok(ok(match args.format {
        Format::Json => to_json(&record),
        Format::Csv => render::exact_csv(&record),
    }))
}

fn experiment_config(args: &SimulateArgs) -> Result<(ExperimentConfig, SimulateConfig), CliError> {
    let split = match args.xi {
        Some(xi) => SplitSpec::with_xi(xi),
        None => SplitSpec::log_log(args.n),
    };
    let workers = match args.workers {
        Some(w) => w,
        None => std::thread::available_parallelism().map_or(1, |w| w.get()),
    };
    let cfg = ExperimentConfig {
        sampler: args.sampler.into(),
        split,
        workers,
        ..ExperimentConfig::new(args.n, args.samples, args.seed)
    };
    cfg.validate()?;
    if args.emit_samples.is_some() && args.samples > FULL_STORE_LIMIT {
        return Err(CliError::Usage(format!(
            "--emit-samples keeps every sample and needs --samples <= {FULL_STORE_LIMIT}"
        )));
    }
    let echo = SimulateConfig {
        n: args.n,
        samples: args.samples,
        seed: args.seed,
        sampler: cfg.sampler,
        xi: split.xi,
        xi_source: split.source,
        emit_samples: args.emit_samples.as_ref().map(|p| p.display().to_string()),
    };
    Ok((cfg, echo))
}

fn simulate(args: &SimulateArgs) -> Result<(SimSummary, SimulateConfig), CliError> {
    let (cfg, echo) = experiment_config(args)?;
    let summary = run_experiment(&cfg)?;
    if let Some(path) = &args.emit_samples {
        write_samples(path, &summary)?;
    }
    Ok((summary, echo))
}

fn write_samples(path: &PathBuf, summary: &SimSummary) -> Result<(), CliError> {
    let io_err = |source| CliError::Io {
        path: path.display().to_string(),
        source,
    };
    let values = summary
        .samples
        .scaled_in_order()
        .expect("sample count checked against the full-store limit");
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut out = std::io::BufWriter::new(file);
    for v in values {
        writeln!(out, "{v}").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<Outcome, CliError> {
    let (summary, echo) = simulate(args)?;
    let record = OutputRecord::new("simulate", echo, summary.stats);
    Ok(ok(match args.format {
        Format::Json => to_json(&record),
        Format::Csv => render::simulate_csv(&record),
    }))
}

fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("--grid expects START:END:COUNT, got {text:?}"));
    let parts: Vec<&str> = text.split(':').collect();
    let [start, end, count] = parts.as_slice() else {
        return Err(bad());
    };
    let start: f64 = start.trim().parse().map_err(|_| bad())?;
    let end: f64 = end.trim().parse().map_err(|_| bad())?;
    let count: usize = count.trim().parse().map_err(|_| bad())?;
    if count == 0 || !start.is_finite() || !end.is_finite() {
        return Err(bad());
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    let step = (end - start) / (count - 1) as f64;
    Ok((0..count).map(|i| start + step * i as f64).collect())
}

fn law_config(tol: Option<f64>) -> Result<LimitLawConfig, CliError> {
    let law = LimitLawConfig {
        tol: tol.unwrap_or(LimitLawConfig::default().tol),
        ..LimitLawConfig::default()
    };
    law.validate()?;
    Ok(law)
}

pub fn cmd_limit(args: &LimitArgs) -> Result<Outcome, CliError> {
    let law = law_config(args.tol)?;
    let (listed, other, flag) = match args.what {
        LimitQuantity::Charfn => (&args.t, &args.x, "--x"),
        LimitQuantity::Density | LimitQuantity::Cdf => (&args.x, &args.t, "--t"),
    };
    if !other.is_empty() {
        return Err(CliError::Usage(format!(
            "{flag} does not apply to --what {}",
            quantity_name(args.what)
        )));
    }
    let mut points = listed.clone();
    if let Some(grid) = &args.grid {
        points.extend(parse_grid(grid)?);
    }
    if points.is_empty() {
        return Err(CliError::Usage(
            "give evaluation points with --x, --t or --grid".to_string(),
        ));
    }
    let payload = match args.what {
        LimitQuantity::Charfn => LimitPayload::Charfn(
            points
                .iter()
                .map(|&t| {
                    let v = charfn_closed(t, &law);
                    CharfnRow { t, re: v.re, im: v.im }
                })
                .collect(),
        ),
        LimitQuantity::Density | LimitQuantity::Cdf => {
            let eval = if args.what == LimitQuantity::Density { density } else { cdf };
            let rows = points
                .iter()
                .map(|&x| {
                    let e = eval(x, &law)?;
                    Ok(SeriesRow {
                        x,
                        value: e.value,
                        error_bound: e.error_bound,
                        terms_used: e.terms_used,
                    })
                })
                .collect::<Result<Vec<_>, LimitError>>()?;
            LimitPayload::Series(rows)
        }
    };
    let config = LimitConfig {
        what: args.what,
        points,
        tol: law.tol,
        x_min: law.x_min,
        product_k: law.product_k,
    };
    let record = OutputRecord::new("limit", config, payload);
    Ok(ok(match args.format {
        Format::Json => to_json(&record),
        Format::Csv => render::limit_csv(&record),
    }))
}

fn quantity_name(what: LimitQuantity) -> &'static str {
    match what {
        LimitQuantity::Density => "density",
        LimitQuantity::Cdf => "cdf",
        LimitQuantity::Charfn => "charfn",
    }
}

pub fn cmd_compare(args: &CompareArgs) -> Result<Outcome, CliError> {
    let law = law_config(args.tol)?;
    let mut fit = FitConfig::with_alpha(args.alpha);
    if !args.checks.is_empty() {
        fit.checks = args.checks.iter().map(|&c| c.into()).collect();
    }
    // reject a bad alpha before spending time on the simulation
    coalesce_core::analysis::dkw_epsilon(1, args.alpha)?;
    let (summary, echo) = simulate(&args.simulation)?;
    let report = fit_report_with(&summary, &law, &fit)?;
    let code = if report.passed() { EXIT_OK } else { EXIT_VERDICT };
    let config = CompareConfig {
        simulation: echo,
        alpha: args.alpha,
        tol: law.tol,
        checks: fit.checks,
    };
    let record = OutputRecord::new("compare", config, report);
    let stdout = match args.simulation.format {
        Format::Json => to_json(&record),
        Format::Csv => render::compare_csv(&record),
    };
    Ok(Outcome { stdout, code })
}
