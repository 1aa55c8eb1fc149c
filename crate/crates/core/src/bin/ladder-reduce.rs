use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ladder_reduce::experiment::{self, ExperimentConfig, THREADS_ENV};
use ladder_reduce::reduction::StopReason;

#[derive(Parser)]
#[command(
    name = "ladder-reduce",
    version,
    about = "Spectrum-preserving reduction of two-leg spin ladders"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one reduction and write its trace CSV.
    Run {
        config: PathBuf,
        /// Overrides the `output` key.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Compare the lowest levels of both bases.
    Spectrum {
        config: PathBuf,
        #[arg(long, default_value_t = 4)]
        k: usize,
    },
    /// Repeat a run over several rung couplings.
    Sweep {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        jt: Vec<f64>,
    },
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, ExitCode> {
    ExperimentConfig::from_file(path).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(1)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, output } => {
            let mut cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            if output.is_some() {
                cfg.output = output;
            }
            match experiment::run_to_file(&cfg) {
                Ok((_, summary)) => {
                    print!("{summary}");
                    if summary.stop == StopReason::SolverFailure {
                        ExitCode::from(2)
                    } else {
                        ExitCode::SUCCESS
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Spectrum { config, k } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            match experiment::spectrum(&cfg, k) {
                Ok(cmp) => {
                    print!("{cmp}");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Sweep { config, jt } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse().ok()) {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            let entries = experiment::sweep(&cfg, &jt);
            print!("{}", experiment::sweep_table(&entries));
            if entries.iter().any(|e| e.result.is_err()) {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
    }
}
