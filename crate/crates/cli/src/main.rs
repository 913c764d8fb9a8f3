use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use feedplan::report::{self, RunConfig};

#[derive(Parser)]
#[command(name = "feedplan", version, about = "Feedrate scheduling on PH quintic spline paths")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Schedule a path and write reference points, profiles and summaries.
    Run {
        #[arg(long)]
        path: PathBuf,
        #[arg(long)]
        limits: PathBuf,
        /// R0, R1, R2, S0, S1, S2 or all.
        #[arg(long, default_value = "all")]
        mode: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        emit_svg: bool,
        /// Audit samples per sampling period.
        #[arg(long, default_value_t = 10)]
        audit_grid: usize,
        /// Samples per spline piece for maximum curvature statistics.
        #[arg(long, default_value_t = 1024)]
        grid_density: usize,
    },
    /// Print path statistics without scheduling.
    Info {
        #[arg(long)]
        path: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run { path, limits, mode, out, emit_svg, audit_grid, grid_density } => {
            let modes = match report::parse_modes(&mode) {
                Ok(m) => m,
                Err(e) => {
                    log::error!("{e}");
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            let config = RunConfig {
                modes,
                emit_svg,
                audit_grid,
                grid_density,
                ..RunConfig::new(path, limits, out)
            };
            match report::run(&config) {
                Ok(outcome) => {
                    for s in &outcome.summaries {
                        let verdict = if s.audit.passed { "ok" } else { "AUDIT FAILED" };
                        println!("{} total_time {:.6} s blocks {} {verdict}", s.mode, s.total_time, s.blocks.len());
                    }
                    ExitCode::from(outcome.exit_code() as u8)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Command::Info { path } => match report::info(&path) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
    }
}
