use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rhjb::cli::{self, CliError, RunConfig};

#[derive(Parser)]
#[command(name = "rhjb", version, about = "Optimal extraction and stopping under regime-switching Lévy prices")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the value function; writes value.csv and report.json.
    Solve(ConfigArgs),
    /// Extract the policy and boundary curves.
    Policy(ConfigArgs),
    /// Monte Carlo estimates and sample trajectories under the solved policy.
    Simulate(ConfigArgs),
    /// Monte Carlo cross-check of the value function at the sample points.
    Validate(ConfigArgs),
    /// Write the built-in two-regime oil-field config and run solve, policy and validate.
    Example5 { outdir: PathBuf },
}

#[derive(clap::Args)]
struct ConfigArgs {
    config: PathBuf,
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(args: &ConfigArgs) -> Result<(RunConfig, PathBuf), CliError> {
    let config = RunConfig::load(&args.config)?;
    let out = args.out.clone().unwrap_or_else(|| config.output_dir.clone());
    Ok((config, out))
}

fn run(args: Args) -> Result<(), CliError> {
    match args.command {
        Command::Solve(a) => {
            let (config, out) = load(&a)?;
            let solved = cli::cmd_solve(&config, &out)?;
            eprintln!(
                "solved {} slices, {} iterations, max contraction ratio {:.6}",
                solved.report.slices.len(),
                solved.report.total_iterations,
                solved.report.max_contraction_ratio
            );
        }
        Command::Policy(a) => {
            let (config, out) = load(&a)?;
            let artifacts = cli::cmd_policy(&config, &out)?;
            eprintln!("wrote policy and {} boundary groups", artifacts.groups.len());
        }
        Command::Simulate(a) => {
            let (config, out) = load(&a)?;
            for p in cli::cmd_simulate(&config, &out)? {
                eprintln!(
                    "s={} x={} y={} regime={}: {:.6} ± {:.6}",
                    p.point.s, p.point.x, p.point.y, p.point.regime, p.estimate.mean, p.estimate.stderr
                );
            }
        }
        Command::Validate(a) => {
            let (config, out) = load(&a)?;
            let outcome = cli::cmd_validate(&config, &out)?;
            eprintln!("all {} points pass", outcome.points.len());
        }
        Command::Example5 { outdir } => {
            let outcome = cli::cmd_example5(&outdir)?;
            eprintln!("example written to {}; all {} points pass", outdir.display(), outcome.points.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    if let Some(threads) = std::env::var("RHJB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if threads > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
        }
    }
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
