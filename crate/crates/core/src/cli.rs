//! Command-line front end: `solve`, `sweep` and `gen`.
//!
//! Exit codes: 0 on success, 1 for configuration or input errors, 2 for
//! runtime failures.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::baseline::{self, Method};
use crate::bench::{self, normalized_error, SweepConfig};
use crate::field::Scalar;
use crate::fixture::{self, AnyFixture, Fixture};
use crate::model::{GroundTruth, HyperParams, ProblemInstance};
use crate::scenario::{self, CorruptionConfig, DoaConfig};
use crate::vb::VbSettings;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "robust-bcs", version, about = "Robust Bayesian compressed sensing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Recover one instance (from a fixture file or generated) and print a report.
    Solve(SolveArgs),
    /// Run a Monte Carlo sweep described by a config file.
    Sweep(SweepArgs),
    /// Write a generated instance as a fixture file.
    Gen(GenArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
enum ScenarioArg {
    Doa,
    Gaussian,
}

#[derive(Debug, Args)]
struct InstanceArgs {
    #[arg(long, value_enum, default_value = "doa")]
    scenario: ScenarioArg,
    #[arg(long, default_value_t = 25)]
    m: usize,
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 7)]
    t: usize,
    #[arg(long, default_value_t = 0.0)]
    noise_var: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Fixture file to solve; a generated instance is used when absent.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// TOML file with optional `[hyper]` and `[solver]` tables.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "bp_rbcs")]
    method: Method,
    #[command(flatten)]
    gen: InstanceArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Print one JSON line per sweep to stderr.
    #[arg(long)]
    trace: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Overrides `master_seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "ROBUST_BCS_THREADS")]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[command(flatten)]
    gen: InstanceArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolveConfig {
    #[serde(default)]
    hyper: HyperParams,
    #[serde(default)]
    solver: VbSettings,
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            CliError::Runtime(format!("cannot create {}: {e}", p.display()))
        })?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

/// Parses `argv` (including the program name) and runs the command.
pub fn cli_main<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let res = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Gen(a) => cmd_gen(a),
    };
    match res {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let mut cfg = SweepConfig::load(&args.config).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    let threads = match args.threads {
        Some(0) => return Err(CliError::Config("--threads must be at least 1".into())),
        Some(t) => t,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let rows = bench::run_sweep(&cfg, threads).map_err(runtime)?;
    let mut out = open_out(args.out.as_deref())?;
    match args.format {
        Format::Csv => bench::write_csv(&rows, &mut out).map_err(runtime)?,
        Format::Json => {
            let ts = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs());
            bench::write_json(&rows, &cfg, ts, &mut out).map_err(runtime)?;
            writeln!(out).map_err(runtime)?;
        }
    }
    out.flush().map_err(runtime)
}

fn generate(args: &InstanceArgs) -> Result<AnyFixture, CliError> {
    let corruption = CorruptionConfig::new(args.t);
    let meta = serde_json::json!({
        "scenario": match args.scenario { ScenarioArg::Doa => "doa", ScenarioArg::Gaussian => "gaussian" },
        "m": args.m, "n": args.n, "k": args.k, "t": args.t,
        "noise_var": args.noise_var,
        "corruption_mode": corruption.mode,
    })
    .to_string();
    let cfg_err = |e: crate::BcsError| CliError::Config(e.to_string());
    Ok(match args.scenario {
        ScenarioArg::Doa => {
            let doa = DoaConfig {
                n: args.n,
                ..DoaConfig::new(args.m)
            };
            let (p, t) = scenario::make_instance(&doa, args.k, &corruption, args.noise_var, args.seed)
                .map_err(cfg_err)?;
            AnyFixture::Complex(Fixture {
                problem: p,
                truth: Some(t),
                seed: Some(args.seed),
                meta: Some(meta),
            })
        }
        ScenarioArg::Gaussian => {
            let (p, t) = scenario::make_gaussian_instance(
                args.m,
                args.n,
                args.k,
                &corruption,
                args.noise_var,
                args.seed,
            )
            .map_err(cfg_err)?;
            AnyFixture::Real(Fixture {
                problem: p,
                truth: Some(t),
                seed: Some(args.seed),
                meta: Some(meta),
            })
        }
    })
}

fn cmd_gen(args: GenArgs) -> Result<(), CliError> {
    let fx = generate(&args.gen)?;
    let text = match &fx {
        AnyFixture::Real(f) => f.to_text(),
        AnyFixture::Complex(f) => f.to_text(),
    };
    let mut out = open_out(args.out.as_deref())?;
    out.write_all(text.as_bytes()).map_err(runtime)?;
    out.flush().map_err(runtime)
}

#[derive(Serialize)]
struct SolveReport {
    method: Method,
    field: crate::ScalarField,
    m: usize,
    n: usize,
    iters: usize,
    converged: bool,
    mean_gamma: f64,
    /// `[re, im]` pairs.
    x_hat: Vec<[f64; 2]>,
    z_prob: Vec<f64>,
    /// Rows with `⟨z_m⟩ < 0.5`.
    flagged_outliers: Vec<usize>,
    normalized_error: Option<f64>,
}

fn solve_fixture<T: Scalar>(
    fx: &Fixture<T>,
    method: Method,
    hyper: &HyperParams,
    settings: &VbSettings,
) -> Result<(SolveReport, Vec<String>), CliError> {
    let p: &ProblemInstance<T> = &fx.problem;
    let truth: Option<&GroundTruth<T>> = fx.truth.as_ref();
    let res = baseline::solve(method, p, truth, hyper, settings).map_err(runtime)?;
    let err = match truth {
        Some(t) if t.x_true.iter().any(|v| v.modulus() > 0.0) => {
            Some(normalized_error(&res.x_hat, &t.x_true).map_err(runtime)?)
        }
        _ => None,
    };
    let z: &DVector<f64> = &res.state.z_prob;
    let report = SolveReport {
        method,
        field: T::FIELD,
        m: p.m(),
        n: p.n(),
        iters: res.iters,
        converged: res.converged,
        mean_gamma: res.state.mean_gamma(),
        x_hat: res.x_hat.iter().map(|v| { let (re, im) = v.parts(); [re, im] }).collect(),
        z_prob: z.iter().copied().collect(),
        flagged_outliers: (0..z.len()).filter(|&i| z[i] < 0.5).collect(),
        normalized_error: err,
    };
    let trace = res
        .trace
        .iter()
        .map(|r| serde_json::to_string(r).expect("trace record serializes"))
        .collect();
    Ok((report, trace))
}

fn cmd_solve(args: SolveArgs) -> Result<(), CliError> {
    let cfg: SolveConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Config(format!("cannot read config file {}: {e}", path.display()))
            })?;
            let cfg: SolveConfig =
                toml::from_str(&text).map_err(|e| CliError::Config(e.message().to_string()))?;
            cfg.hyper.validate().map_err(|e| CliError::Config(e.to_string()))?;
            cfg
        }
        None => SolveConfig::default(),
    };
    let mut settings = cfg.solver;
    settings.trace = args.trace;

    let fx = match &args.instance {
        Some(path) => fixture::read(path).map_err(|e| CliError::Config(e.to_string()))?,
        None => generate(&args.gen)?,
    };
    let (report, trace) = match &fx {
        AnyFixture::Real(f) => solve_fixture(f, args.method, &cfg.hyper, &settings)?,
        AnyFixture::Complex(f) => solve_fixture(f, args.method, &cfg.hyper, &settings)?,
    };
    for line in trace {
        eprintln!("{line}");
    }
    let mut out = open_out(args.out.as_deref())?;
    match args.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &report).map_err(runtime)?;
            writeln!(out).map_err(runtime)?;
        }
        Format::Csv => {
            writeln!(out, "index,re,im").map_err(runtime)?;
            for (i, [re, im]) in report.x_hat.iter().enumerate() {
                writeln!(
                    out,
                    "{i},{},{}",
                    bench::format_sig12(*re),
                    bench::format_sig12(*im)
                )
                .map_err(runtime)?;
            }
        }
    }
    out.flush().map_err(runtime)
}
