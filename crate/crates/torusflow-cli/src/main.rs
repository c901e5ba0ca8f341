//! Batch front end for the torus-surface toolkit. Each run is one
//! subcommand plus one config file; exit code 0 means all checks passed,
//! 2 a configuration problem, 3 a numeric failure.

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "torusflow",
    version,
    about = "Möbius-invariant surface analysis on sampled conformal tori"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract Schwarzian and Hopf fields from a surface and verify
    /// integrability.
    Invariants { config: String },
    /// Verify integrability and report classification residuals.
    Check { config: String },
    /// Evolve a surface under a conformal deformation flow.
    Flow { config: String },
    /// Rebuild a surface in S^3 from its invariants.
    Reconstruct { config: String },
    /// Evolve a periodic Schwarzian under the KdV hierarchy.
    Kdv { config: String },
    /// Run the distinguished-surface batteries.
    Special { config: String },
}

fn main() {
    if let Ok(threads) = std::env::var("TORUSFLOW_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n > 0 => {
                // double initialization only happens in-process; the pool
                // cannot have been built yet at this point in main
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("config error: TORUSFLOW_THREADS must be a positive integer, got {threads:?}");
                std::process::exit(2);
            }
        }
    }
    let cli = Cli::parse();
    let (command, config_path) = match &cli.command {
        Command::Invariants { config } => ("invariants", config),
        Command::Check { config } => ("check", config),
        Command::Flow { config } => ("flow", config),
        Command::Reconstruct { config } => ("reconstruct", config),
        Command::Kdv { config } => ("kdv", config),
        Command::Special { config } => ("special", config),
    };
    let start = std::time::Instant::now();
    let result = torusflow_cli::dispatch(command, config_path);
    // wall time never goes into the report, keeping outputs byte-identical
    eprintln!("wall_time_s {:.3}", start.elapsed().as_secs_f64());
    match result {
        Ok(()) => {}
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code() as i32);
        }
    }
}
