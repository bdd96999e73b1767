//! `nonlocal-eigen`: eigenpairs, large solutions, λ-sweeps, `s → 1`
//! ladders and the verification suite from the command line.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nonlocal_eigen::geometry::DomainKind;
use nonlocal_eigen::kernels::OperatorKind;

use config::{parse_boundary, parse_list, Profile, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] nonlocal_eigen::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) if e.is_config() => 2,
            CliError::Core(nonlocal_eigen::Error::SingularLambda { .. }) => 4,
            _ => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OpArg {
    Rfl,
    Sfl,
    Classical,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DomainArg {
    Interval,
    Ball,
}

#[derive(Debug, Parser)]
#[command(name = "nonlocal-eigen", version, about = "Eigenpairs and large solutions of L u - lambda u = f")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Eigenpairs of the discrete Green operator.
    Eigen,
    /// Large solution for one lambda.
    Solve,
    /// Solutions along a lambda list approaching an eigenvalue.
    Sweep,
    /// The s -> 1 ladder against the classical Laplacian.
    #[command(name = "limit-s")]
    LimitS,
    /// Run every named check; exit 1 if any fails.
    Verify,
}

#[derive(Debug, clap::Args)]
struct Opts {
    #[arg(long, global = true, value_enum, default_value = "rfl")]
    op: OpArg,
    /// Order; defaults to 0.75 (1 for the classical operator).
    #[arg(long, global = true, allow_hyphen_values = true)]
    s: Option<f64>,
    #[arg(long, global = true, value_enum, default_value = "interval")]
    domain: DomainArg,
    /// Space dimension.
    #[arg(long, global = true, default_value_t = 1)]
    n: usize,
    #[arg(long, global = true, default_value_t = 1.0)]
    r: f64,
    /// Number of quadrature nodes.
    #[arg(long = "N", global = true, default_value_t = 256)]
    nodes: usize,
    /// Grading exponent; defaults to 1 for the SFL and 2 otherwise.
    #[arg(long, global = true)]
    grade: Option<f64>,
    /// SFL matrix truncation (defaults to N).
    #[arg(long = "M", global = true)]
    m: Option<usize>,
    #[arg(long, global = true, allow_hyphen_values = true, conflicts_with = "lambda_list")]
    lambda: Option<f64>,
    /// Comma-separated lambda values.
    #[arg(long = "lambda-list", global = true, allow_hyphen_values = true)]
    lambda_list: Option<String>,
    /// zero | one | delta_pow(a) | eigmode(j) | table(path) | @path
    #[arg(long, global = true, default_value = "zero")]
    g: String,
    /// Boundary values: one constant, or left,right on the interval.
    #[arg(long, global = true, allow_hyphen_values = true, default_value = "1")]
    h: String,
    #[arg(long = "K-frac", global = true, default_value_t = 0.25)]
    k_frac: f64,
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// One-based eigenvalue group for sweep.
    #[arg(long, global = true, default_value_t = 1)]
    index: usize,
    /// below | above
    #[arg(long, global = true, default_value = "below")]
    approach: String,
    /// Comma-separated s ladder for limit-s.
    #[arg(long = "s-list", global = true, default_value = "0.7,0.8,0.9,0.95,0.99")]
    s_list: String,
}

fn build_config(command: &Command, o: Opts) -> Result<RunConfig, CliError> {
    let op = match o.op {
        OpArg::Rfl => OperatorKind::Rfl,
        OpArg::Sfl => OperatorKind::Sfl,
        OpArg::Classical => OperatorKind::Classical,
    };
    let domain = match o.domain {
        DomainArg::Interval => DomainKind::Interval,
        DomainArg::Ball => DomainKind::Ball,
    };
    let default_s = if op == OperatorKind::Classical { 1.0 } else { 0.75 };
    let default_grade = if op == OperatorKind::Sfl { 1.0 } else { 2.0 };
    if !(o.k_frac > 0.0 && o.k_frac < 1.0) {
        return Err(CliError::Config(format!("--K-frac must lie in (0, 1), got {}", o.k_frac)));
    }
    let command = match command {
        Command::Eigen => "eigen",
        Command::Solve => "solve",
        Command::Sweep => "sweep",
        Command::LimitS => "limit-s",
        Command::Verify => "verify",
    };
    let cfg = RunConfig {
        command: command.into(),
        op,
        s: o.s.unwrap_or(default_s),
        domain,
        n: o.n,
        r: o.r,
        nodes: o.nodes,
        grade: o.grade.unwrap_or(default_grade),
        m: o.m,
        lambda: o.lambda,
        lambda_list: o.lambda_list.as_deref().map(|l| parse_list(l, "--lambda-list")).transpose()?,
        g: Profile::parse(&o.g)?,
        h: parse_boundary(&o.h, domain)?,
        k_frac: o.k_frac,
        out: o.out,
        seed: o.seed,
        index: o.index,
        approach: o.approach,
        s_list: parse_list(&o.s_list, "--s-list")?,
        version: env!("CARGO_PKG_VERSION"),
    };
    // Validate operator, domain and grid up front so bad input exits 2.
    let spec = cfg.operator()?;
    nonlocal_eigen::geometry::build_grid(spec.domain, cfg.nodes, cfg.grade)?;
    Ok(cfg)
}

fn init_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("NONLOCAL_EIGEN_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Config(format!("NONLOCAL_EIGEN_THREADS must be a positive integer, got '{v}'")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, CliError> {
    init_threads()?;
    let cfg = build_config(&cli.command, cli.opts)?;
    match cli.command {
        Command::Eigen => commands::eigen(&cfg)?,
        Command::Solve => commands::solve(&cfg)?,
        Command::Sweep => commands::sweep(&cfg)?,
        Command::LimitS => commands::limit_s(&cfg)?,
        Command::Verify => return commands::verify(&cfg),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Core(nonlocal_eigen::Error::SingularLambda { nearest, index, .. }) = &e {
                eprintln!("nearest eigenvalue: lambda_{index} = {nearest}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
