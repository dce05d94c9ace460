use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser};
use poolsim::{exit_code, run_scenario, run_sweep, Policy};

/// Ride-pooling market simulator.
///
/// Runs one scenario (`--config`) or a supply × demand × policy sweep
/// (`--sweep`). Exit status: 0 success, 1 sweep cell failures, 2 invalid
/// input, 3 IO failure. Set `POOLSIM_LOG` (e.g. `info`) for progress output.
#[derive(Parser, Debug)]
#[command(name = "poolsim", version)]
#[command(group(ArgGroup::new("mode").required(true).args(["config", "sweep"])))]
struct Args {
    /// Scenario file (TOML).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Sweep file (TOML).
    #[arg(long, value_name = "PATH")]
    sweep: Option<PathBuf>,

    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,

    /// Override the scenario seed.
    #[arg(long, value_name = "N", conflicts_with = "sweep")]
    seed: Option<u64>,

    /// Worker threads for sweeps. Defaults to the number of CPUs.
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u32).range(1..))]
    parallelism: Option<u32>,

    /// Override the pricing policy.
    #[arg(long, value_name = "POLICY", conflicts_with = "sweep")]
    policy: Option<Policy>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("POOLSIM_LOG", "warn")).init();
    let args = Args::parse();

    let status = if let Some(config) = &args.config {
        run_scenario(config, &args.out, args.seed, args.policy).map(|_| 0)
    } else {
        let sweep = args.sweep.as_ref().expect("clap enforces one mode");
        let threads = args
            .parallelism
            .map(|n| n as usize)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        run_sweep(sweep, &args.out, threads).map(|rows| {
            let failed = rows.iter().filter(|r| r.result.is_err()).count();
            if failed > 0 {
                eprintln!("poolsim: {failed} of {} sweep cells failed", rows.len());
                1
            } else {
                0
            }
        })
    };

    match status {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("poolsim: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
