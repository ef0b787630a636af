mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::CliError;
use crate::config::RawConfig;

#[derive(Debug, Parser)]
#[command(name = "fkp", version, about = "Lump solutions of the fractional KP-I equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute a lump by Petviashvili iteration.
    Solve(RunArgs),
    /// Cross sections, symmetry, decay plateaus and functionals of a stored field.
    Analyze(AnalyzeArgs),
    /// Truncated L^p norms of the kernel symbols.
    KernelProbe(ProbeArgs),
    /// Write the closed-form KP-I lump on a grid.
    Reference(ReferenceArgs),
    /// Solve on growing domains at fixed spacing and tabulate the errors.
    ConvergenceStudy(StudyArgs),
}

/// Solver settings. Values are kept as text so that parse errors can name
/// the flag they came from.
#[derive(Debug, Clone, Default, Args)]
struct RunArgs {
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    c: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    sigma: Option<String>,
    #[arg(long)]
    nu: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    l: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long = "max-iter")]
    max_iter: Option<String>,
    /// gaussian, exact-kp1 or file:PATH
    #[arg(long)]
    seed: Option<String>,
    #[arg(long = "seed-amplitude", allow_hyphen_values = true)]
    seed_amplitude: Option<String>,
    #[arg(long = "seed-width")]
    seed_width: Option<String>,
    #[arg(long = "allow-supercritical")]
    allow_supercritical: bool,
    /// Form the quadratic term on a 3/2-padded grid.
    #[arg(long)]
    dealias: bool,
    #[arg(long)]
    out: Option<String>,
    /// `key = value` file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl RunArgs {
    fn raw(&self) -> Result<RawConfig, CliError> {
        let mut raw = match &self.config {
            Some(path) => config::read_config_file(path)?,
            None => RawConfig::new(),
        };
        let flags = [
            ("alpha", &self.alpha),
            ("c", &self.c),
            ("sigma", &self.sigma),
            ("nu", &self.nu),
            ("lambda", &self.lambda),
            ("n", &self.n),
            ("l", &self.l),
            ("tol", &self.tol),
            ("max-iter", &self.max_iter),
            ("seed", &self.seed),
            ("seed-amplitude", &self.seed_amplitude),
            ("seed-width", &self.seed_width),
            ("out", &self.out),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                raw.insert(key.to_string(), v.clone());
            }
        }
        if self.allow_supercritical {
            raw.insert("allow-supercritical".into(), "true".into());
        }
        if self.dealias {
            raw.insert("dealias".into(), "true".into());
        }
        Ok(raw)
    }
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Field file to analyze.
    field: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated section offsets.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0")]
    offsets: Vec<f64>,
    /// Exponent k in the r^k φ decay profiles.
    #[arg(long, default_value_t = 2.0)]
    power: f64,
}

#[derive(Debug, Args)]
struct ProbeArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    alpha: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    p: Vec<f64>,
    /// m or h
    #[arg(long, default_value = "m")]
    which: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ReferenceArgs {
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 1024)]
    n: usize,
    #[arg(long, default_value_t = 256.0)]
    l: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct StudyArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated half-widths.
    #[arg(long = "l-list", value_delimiter = ',', required = true)]
    l_list: Vec<f64>,
    /// Grid spacing shared by every run.
    #[arg(long)]
    dx: f64,
}

fn init_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("FKP_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| config::ConfigError::new("FKP_THREADS", format!("`{value}` is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| config::ConfigError::new("FKP_THREADS", e.to_string()))?;
    Ok(())
}

fn run(cli: Cli) -> Result<u8, CliError> {
    init_threads()?;
    match cli.command {
        Command::Solve(args) => commands::solve(&args.raw()?),
        Command::Analyze(a) => commands::analyze(&a.field, &a.out, &a.offsets, a.power),
        Command::KernelProbe(a) => commands::kernel_probe(&a.alpha, &a.p, &a.which, &a.out),
        Command::Reference(a) => commands::reference(a.c, a.n, a.l, &a.out),
        Command::ConvergenceStudy(a) => commands::convergence_study(&a.run.raw()?, &a.l_list, a.dx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
