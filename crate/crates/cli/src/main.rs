mod commands;
mod config;
mod error;
mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use config::{Command, ExperimentConfig};
use error::{CliError, CliResult};
use output::OutputDir;

/// Experiments on the angles of lattice points on circles.
#[derive(Parser, Debug)]
#[command(name = "latangle", version)]
struct Cli {
    /// Base seed for every random choice in the run
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: available cores); does not affect results
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Mantissa bits for angle and repulsion arithmetic
    #[arg(long, global = true)]
    precision_bits: Option<usize>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Run the configuration saved in a config.toml
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

fn resolve(cli: &Cli) -> CliResult<ExperimentConfig> {
    let mut cfg = match (&cli.config, &cli.command) {
        (Some(path), None) => ExperimentConfig::from_toml(&fs::read_to_string(path)?)?,
        (None, Some(cmd)) => ExperimentConfig {
            seed: 0,
            precision_bits: cmd.default_precision_bits(),
            command: cmd.clone(),
        },
        (Some(_), Some(_)) => return Err(CliError::Usage("--config and a subcommand are exclusive".into())),
        (None, None) => return Err(CliError::Usage("a subcommand or --config is required".into())),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(b) = cli.precision_bits {
        cfg.precision_bits = b;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> CliResult<()> {
    let cfg = resolve(cli)?;
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let start = Instant::now();
    let mut out = OutputDir::create(&cli.out, &cfg)?;
    let summary = commands::run(&cfg, &mut out)?;
    println!("{}", serde_json::to_string(&summary)?);
    out.write_manifest(&cfg, summary, start.elapsed().as_secs_f64())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("latangle: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
