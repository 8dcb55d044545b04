mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use commands::Failure;
use config::{ConfigFile, Overrides};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "mfode", disable_version_flag = true, about = "Multi-copy mean-field ODE toolkit")]
struct Cli {
    /// Print the artifact and schema versions.
    #[arg(long)]
    version: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a system description and write its augmented form.
    Encode(Flags),
    /// Euler, RK4 and history solves for one system.
    Solve(Flags),
    /// scaling_vs_n, scaling_vs_dt, generator_discrimination or example:<name>.
    Experiment {
        name: String,
        #[command(flatten)]
        flags: Flags,
    },
}

#[derive(Args, Clone, Default)]
struct Flags {
    #[arg(long)]
    config: Option<PathBuf>,
    /// System description JSON.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Built-in system instead of --spec.
    #[arg(long)]
    system: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    dt: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    steps: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    copies: Vec<usize>,
    #[arg(long, allow_negative_numbers = true)]
    eps: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    cap: Option<usize>,
    /// target_only, role_complete or both.
    #[arg(long)]
    comparator: Option<String>,
}

fn run(flags: Flags, single_grid: bool, body: impl FnOnce(&config::RunConfig) -> Result<i32, Failure>) -> Result<i32, Failure> {
    let file = match &flags.config {
        Some(path) => ConfigFile::load(path).map_err(Failure::config)?,
        None => ConfigFile::default(),
    };
    let overrides = Overrides {
        spec: flags.spec,
        system: flags.system,
        out: flags.out,
        dt: flags.dt,
        steps: flags.steps,
        copies: flags.copies,
        eps: flags.eps,
        seed: flags.seed,
        threads: flags.threads,
        cap: flags.cap,
        comparator: flags.comparator,
    };
    let cfg = config::resolve(file, overrides, single_grid).map_err(Failure::config)?;
    if let Some(threads) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure {
                code: commands::EXIT_OPERATIONAL,
                message: e.to_string(),
            })?;
    }
    body(&cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.version {
        println!("mfode {}", env!("CARGO_PKG_VERSION"));
        println!("schema {}", mfode_core::SCHEMA_VERSION);
        return ExitCode::SUCCESS;
    }
    let result = match cli.command {
        Some(Command::Encode(flags)) => run(flags, true, commands::encode),
        Some(Command::Solve(flags)) => run(flags, true, commands::solve),
        Some(Command::Experiment { name, flags }) => run(flags, false, |cfg| commands::experiment(cfg, &name)),
        None => Err(Failure::config("no subcommand given; see --help")),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}
